#include "passforge/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

PolicyShape PolicyShape::for_env(const EnvConfig& cfg) {
  PolicyShape s;
  s.pre_in = cfg.pre_tensor_size();
  s.post_in = cfg.post_tensor_size();
  s.aux_in = kNumStages + kGlobalFeatures + cfg.history_size();
  return s;
}

template <typename S>
std::vector<Linear<S>*> PolicyParamsT<S>::layers() {
  std::vector<Linear<S>*> out;
  for (auto* group : {&encoder_pre, &encoder_post, &trunk}) {
    for (auto& l : *group) out.push_back(&l);
  }
  out.push_back(&policy_head);
  out.push_back(&value_head);
  return out;
}

template <typename S>
std::vector<const Linear<S>*> PolicyParamsT<S>::layers() const {
  std::vector<const Linear<S>*> out;
  for (auto* l : const_cast<PolicyParamsT*>(this)->layers()) out.push_back(l);
  return out;
}

template <typename S>
std::size_t PolicyParamsT<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : layers()) n += static_cast<std::size_t>(l->w.size() + l->b.size());
  return n;
}

template <typename S>
PolicyParamsT<S> PolicyParamsT<S>::zeros_like() const {
  PolicyParamsT out = *this;
  for (auto* l : out.layers()) {
    l->w.setZero();
    l->b.setZero();
  }
  return out;
}

template <typename S>
template <typename T>
PolicyParamsT<T> PolicyParamsT<S>::cast() const {
  auto conv = [](const std::vector<Linear<S>>& v) {
    std::vector<Linear<T>> out;
    for (const auto& l : v) out.push_back({l.w.template cast<T>(), l.b.template cast<T>()});
    return out;
  };
  PolicyParamsT<T> out;
  out.encoder_pre = conv(encoder_pre);
  out.encoder_post = conv(encoder_post);
  out.trunk = conv(trunk);
  out.policy_head = {policy_head.w.template cast<T>(), policy_head.b.template cast<T>()};
  out.value_head = {value_head.w.template cast<T>(), value_head.b.template cast<T>()};
  return out;
}

namespace {

template <typename S>
Linear<S> he_uniform(int in, int out, std::uint64_t seed, double gain) {
  std::mt19937_64 rng(seed);
  const double limit = gain * std::sqrt(6.0 / std::max(in, 1));
  std::uniform_real_distribution<double> u(-limit, limit);
  Linear<S> l;
  l.w.resize(out, in);
  for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
    for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(r, c) = static_cast<S>(u(rng));
  }
  l.b = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(out);
  return l;
}

template <typename S>
std::vector<Linear<S>> stack(int in, const std::vector<int>& widths, std::uint64_t seed, std::uint64_t& index) {
  std::vector<Linear<S>> out;
  for (int w : widths) {
    out.push_back(he_uniform<S>(in, w, derive_seed(seed, index++), 1.0));
    in = w;
  }
  return out;
}

constexpr double kMaskedLogit = -1e9;

}  // namespace

template <typename S>
PolicyParamsT<S> init_params(const PolicyShape& shape, std::uint64_t seed) {
  if (shape.encoder.empty() || shape.trunk.empty()) throw ValidationError("encoder and trunk need layers");
  std::uint64_t index = 0;
  PolicyParamsT<S> p;
  p.encoder_pre = stack<S>(shape.pre_in, shape.encoder, seed, index);
  p.encoder_post = stack<S>(shape.post_in, shape.encoder, seed, index);
  p.trunk = stack<S>(shape.encoder.back() + shape.aux_in, shape.trunk, seed, index);
  // Small policy head: near-uniform initial action distribution.
  p.policy_head = he_uniform<S>(shape.trunk.back(), shape.actions, derive_seed(seed, index++), 0.01);
  p.value_head = he_uniform<S>(shape.trunk.back(), 1, derive_seed(seed, index++), 1.0);
  return p;
}

template <typename S>
ForwardCache<S> policy_forward(const PolicyParamsT<S>& params, const PolicyShape& shape,
                               std::span<const Observation* const> obs, std::span<const ActionMask> masks,
                               PolicyMode mode, std::uint64_t dropout_seed) {
  using Mat = typename ForwardCache<S>::Mat;
  if (obs.size() != masks.size()) throw ValidationError("observation and mask counts differ");
  ForwardCache<S> cache;
  cache.n = obs.size();
  cache.masks.assign(masks.begin(), masks.end());
  const auto n = static_cast<Eigen::Index>(obs.size());
  const int enc_out = shape.encoder.back();

  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = *obs[static_cast<std::size_t>(i)];
    const int e = o.post_routing() ? 1 : 0;
    const auto expect = static_cast<std::size_t>(e ? shape.post_in : shape.pre_in);
    if (o.circuit_tensor.size() != expect) throw ValidationError("circuit tensor does not match the policy shape");
    if (kNumStages + o.global.size() + o.history.size() != static_cast<std::size_t>(shape.aux_in)) {
      throw ValidationError("auxiliary features do not match the policy shape");
    }
    cache.columns[static_cast<std::size_t>(e)].push_back(i);
  }

  cache.trunk_in = Mat::Zero(enc_out + shape.aux_in, n);
  for (int e = 0; e < 2; ++e) {
    const auto& cols = cache.columns[static_cast<std::size_t>(e)];
    const auto& layers = e ? params.encoder_post : params.encoder_pre;
    const int in = e ? shape.post_in : shape.pre_in;
    std::vector<Eigen::Triplet<S>> triplets;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& t = obs[static_cast<std::size_t>(cols[j])]->circuit_tensor;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] != 0.0F) triplets.emplace_back(static_cast<int>(k), static_cast<int>(j), static_cast<S>(t[k]));
      }
    }
    auto& x = cache.inputs[static_cast<std::size_t>(e)];
    x.resize(in, static_cast<Eigen::Index>(cols.size()));
    x.setFromTriplets(triplets.begin(), triplets.end());
    if (cols.empty()) continue;

    auto& zs = cache.enc_z[static_cast<std::size_t>(e)];
    auto& as = cache.enc_a[static_cast<std::size_t>(e)];
    auto& drops = cache.enc_drop[static_cast<std::size_t>(e)];
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Mat z = l == 0 ? Mat(layers[0].w * x) : Mat(layers[l].w * as.back());
      z.colwise() += layers[l].b;
      Mat a = z.cwiseMax(S(0));
      if (mode == PolicyMode::Train && shape.dropout > 0.0) {
        std::mt19937_64 rng(derive_seed(dropout_seed, static_cast<std::uint64_t>(e * 64) + l));
        std::bernoulli_distribution keep(1.0 - shape.dropout);
        const S scale = static_cast<S>(1.0 / (1.0 - shape.dropout));
        Mat d(a.rows(), a.cols());
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
          for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, c) = keep(rng) ? scale : S(0);
        }
        a = a.cwiseProduct(d);
        drops.push_back(std::move(d));
      }
      zs.push_back(std::move(z));
      as.push_back(std::move(a));
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
      cache.trunk_in.block(0, cols[j], enc_out, 1) = as.back().col(static_cast<Eigen::Index>(j));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = *obs[static_cast<std::size_t>(i)];
    Eigen::Index r = enc_out;
    for (float v : o.stage_onehot) cache.trunk_in(r++, i) = static_cast<S>(v);
    for (float v : o.global) cache.trunk_in(r++, i) = static_cast<S>(v);
    for (float v : o.history) cache.trunk_in(r++, i) = static_cast<S>(v);
  }

  const Mat* h = &cache.trunk_in;
  for (const auto& layer : params.trunk) {
    Mat z = layer.w * *h;
    z.colwise() += layer.b;
    cache.trunk_a.push_back(z.cwiseMax(S(0)));
    cache.trunk_z.push_back(std::move(z));
    h = &cache.trunk_a.back();
  }
  Mat logits = params.policy_head.w * *h;
  logits.colwise() += params.policy_head.b;
  Mat values = params.value_head.w * *h;
  values.colwise() += params.value_head.b;

  const int A = shape.actions;
  cache.logits = logits.template cast<double>();
  cache.values = values.row(0).transpose().template cast<double>();
  cache.probs = Eigen::MatrixXd::Zero(A, n);
  cache.log_probs = Eigen::MatrixXd::Zero(A, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = cache.masks[static_cast<std::size_t>(i)];
    if (m.none()) throw ValidationError("empty action mask");
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      if (!m[static_cast<std::size_t>(a)]) {
        cache.logits(a, i) += kMaskedLogit;
      } else {
        mx = std::max(mx, cache.logits(a, i));
      }
    }
    double z = 0.0;
    for (int a = 0; a < A; ++a) {
      if (m[static_cast<std::size_t>(a)]) z += std::exp(cache.logits(a, i) - mx);
    }
    const double log_z = mx + std::log(z);
    for (int a = 0; a < A; ++a) {
      if (!m[static_cast<std::size_t>(a)]) continue;
      cache.log_probs(a, i) = cache.logits(a, i) - log_z;
      cache.probs(a, i) = std::exp(cache.log_probs(a, i));
    }
  }
  return cache;
}

template <typename S>
PolicyParamsT<S> policy_backward(const PolicyParamsT<S>& params, const ForwardCache<S>& cache,
                                 const Eigen::MatrixXd& dlogits_in, const Eigen::VectorXd& dvalues) {
  using Mat = typename ForwardCache<S>::Mat;
  PolicyParamsT<S> g = params.zeros_like();
  const auto n = static_cast<Eigen::Index>(cache.n);
  if (n == 0) return g;
  Eigen::MatrixXd dl = dlogits_in;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < dl.rows(); ++a) {
      if (!cache.masks[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]) dl(a, i) = 0.0;
    }
  }
  const Mat dlogits = dl.cast<S>();
  const Mat dv = dvalues.transpose().cast<S>();
  const Mat& top = cache.trunk_a.back();
  g.policy_head.w = dlogits * top.transpose();
  g.policy_head.b = dlogits.rowwise().sum();
  g.value_head.w = dv * top.transpose();
  g.value_head.b = dv.rowwise().sum();
  Mat dh = params.policy_head.w.transpose() * dlogits + params.value_head.w.transpose() * dv;

  for (std::size_t l = params.trunk.size(); l-- > 0;) {
    const Mat dz = dh.cwiseProduct((cache.trunk_z[l].array() > S(0)).matrix().template cast<S>());
    const Mat& prev = l == 0 ? cache.trunk_in : cache.trunk_a[l - 1];
    g.trunk[l].w = dz * prev.transpose();
    g.trunk[l].b = dz.rowwise().sum();
    dh = params.trunk[l].w.transpose() * dz;
  }

  const Eigen::Index enc_out = params.encoder_pre.back().w.rows();
  for (int e = 0; e < 2; ++e) {
    const auto& cols = cache.columns[static_cast<std::size_t>(e)];
    if (cols.empty()) continue;
    const auto& layers = e ? params.encoder_post : params.encoder_pre;
    auto& grads = e ? g.encoder_post : g.encoder_pre;
    const auto& zs = cache.enc_z[static_cast<std::size_t>(e)];
    const auto& as = cache.enc_a[static_cast<std::size_t>(e)];
    const auto& drops = cache.enc_drop[static_cast<std::size_t>(e)];
    Mat da(enc_out, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) da.col(static_cast<Eigen::Index>(j)) = dh.block(0, cols[j], enc_out, 1);
    for (std::size_t l = layers.size(); l-- > 0;) {
      Mat dz = drops.empty() ? da : Mat(da.cwiseProduct(drops[l]));
      dz = dz.cwiseProduct((zs[l].array() > S(0)).matrix().template cast<S>());
      if (l == 0) {
        grads[0].w = dz * cache.inputs[static_cast<std::size_t>(e)].transpose();
      } else {
        grads[l].w = dz * as[l - 1].transpose();
        da = layers[l].w.transpose() * dz;
      }
      grads[l].b = dz.rowwise().sum();
    }
  }
  return g;
}

namespace {

void check_single(const PolicyShape& shape, const Observation& obs, const ActionMask& mask) {
  if (obs.circuit_tensor.size() != static_cast<std::size_t>(obs.post_routing() ? shape.post_in : shape.pre_in)) {
    throw ValidationError("circuit tensor does not match the policy shape");
  }
  if (kNumStages + obs.global.size() + obs.history.size() != static_cast<std::size_t>(shape.aux_in)) {
    throw ValidationError("auxiliary features do not match the policy shape");
  }
  if (mask.none()) throw ValidationError("empty action mask");
}

// The first layer gathers only the non-zero input columns.
Eigen::VectorXf encode_single(const std::vector<Linear<float>>& encoder, const std::vector<float>& t) {
  Eigen::VectorXf h = encoder[0].b;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] != 0.0F) h.noalias() += t[k] * encoder[0].w.col(static_cast<Eigen::Index>(k));
  }
  h = h.cwiseMax(0.0F);
  for (std::size_t l = 1; l < encoder.size(); ++l) {
    Eigen::VectorXf z = encoder[l].b;
    z.noalias() += encoder[l].w * h;
    h = z.cwiseMax(0.0F);
  }
  return h;
}

PolicyOutput head_single(const PolicyParams& params, const PolicyShape& shape, const Eigen::VectorXf& embedding,
                         const Observation& obs, const ActionMask& mask) {
  Eigen::VectorXf x(embedding.size() + shape.aux_in);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < embedding.size(); ++i) x(r++) = embedding(i);
  for (float v : obs.stage_onehot) x(r++) = v;
  for (float v : obs.global) x(r++) = v;
  for (float v : obs.history) x(r++) = v;
  for (const auto& layer : params.trunk) {
    Eigen::VectorXf z = layer.b;
    z.noalias() += layer.w * x;
    x = z.cwiseMax(0.0F);
  }
  Eigen::VectorXf logits = params.policy_head.b;
  logits.noalias() += params.policy_head.w * x;

  PolicyOutput out;
  out.value = static_cast<double>(params.value_head.b(0) + params.value_head.w.row(0).dot(x));
  out.probs.assign(static_cast<std::size_t>(shape.actions), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < shape.actions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) mx = std::max(mx, static_cast<double>(logits(a)));
  }
  double z = 0.0;
  for (int a = 0; a < shape.actions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) z += std::exp(static_cast<double>(logits(a)) - mx);
  }
  const double log_z = mx + std::log(z);
  for (int a = 0; a < shape.actions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) out.probs[static_cast<std::size_t>(a)] = std::exp(logits(a) - log_z);
  }
  return out;
}

}  // namespace

PolicyOutput evaluate_policy(const PolicyParams& params, const PolicyShape& shape, const Observation& obs,
                             const ActionMask& mask) {
  check_single(shape, obs, mask);
  const auto& encoder = obs.post_routing() ? params.encoder_post : params.encoder_pre;
  return head_single(params, shape, encode_single(encoder, obs.circuit_tensor), obs, mask);
}

PolicyOutput PolicyEvaluator::operator()(const Observation& obs, const ActionMask& mask) {
  check_single(*shape_, obs, mask);
  const std::size_t e = obs.post_routing() ? 1 : 0;
  Memo& m = memo_[e];
  const auto& t = obs.circuit_tensor;
  if (!m.valid || m.input.size() != t.size() || std::memcmp(m.input.data(), t.data(), t.size() * sizeof(float)) != 0) {
    m.embedding = encode_single(e ? params_->encoder_post : params_->encoder_pre, obs.circuit_tensor);
    m.input = obs.circuit_tensor;
    m.valid = true;
  }
  return head_single(*params_, *shape_, m.embedding, obs, mask);
}

int greedy_action(const PolicyOutput& out, const ActionMask& mask) {
  int best = -1;
  for (int a = 0; a < static_cast<int>(out.probs.size()); ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    if (best < 0 || out.probs[static_cast<std::size_t>(a)] > out.probs[static_cast<std::size_t>(best)]) best = a;
  }
  if (best < 0) throw ContractError("empty action mask");
  return best;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  unsigned char byte() {
    const int c = is_.get();
    if (c == std::char_traits<char>::eof()) throw ValidationError("checkpoint truncated");
    return static_cast<unsigned char>(c);
  }
  std::istream& is_;
};

}  // namespace

void checkpoint_save(const PolicyParams& params, const PolicyShape& shape, std::uint64_t observation_hash,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(kMagic, 4);
  Writer w(os);
  w.u32(kVersion);
  w.u64(observation_hash);
  for (int v : {shape.pre_in, shape.post_in, shape.aux_in, shape.actions}) w.u32(static_cast<std::uint32_t>(v));
  w.f64(shape.dropout);
  w.u32(static_cast<std::uint32_t>(shape.encoder.size()));
  for (int v : shape.encoder) w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(shape.trunk.size()));
  for (int v : shape.trunk) w.u32(static_cast<std::uint32_t>(v));
  const auto layers = params.layers();
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto* l : layers) {
    w.u32(static_cast<std::uint32_t>(l->w.rows()));
    w.u32(static_cast<std::uint32_t>(l->w.cols()));
  }
  for (const auto* l : layers) {
    for (Eigen::Index r = 0; r < l->w.rows(); ++r) {
      for (Eigen::Index c = 0; c < l->w.cols(); ++c) w.f32(l->w(r, c));
    }
    for (Eigen::Index r = 0; r < l->b.size(); ++r) w.f32(l->b(r));
  }
  if (!os) throw Error("failed writing " + path);
}

Checkpoint checkpoint_load(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ValidationError(path + " is not a passforge checkpoint");
  Reader r(is);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.observation_hash = r.u64();
  if (expected_hash != 0 && ck.observation_hash != expected_hash) {
    throw ValidationError("checkpoint was trained with an incompatible observation configuration");
  }
  ck.shape.pre_in = static_cast<int>(r.u32());
  ck.shape.post_in = static_cast<int>(r.u32());
  ck.shape.aux_in = static_cast<int>(r.u32());
  ck.shape.actions = static_cast<int>(r.u32());
  ck.shape.dropout = r.f64();
  ck.shape.encoder.resize(r.u32());
  for (int& v : ck.shape.encoder) v = static_cast<int>(r.u32());
  ck.shape.trunk.resize(r.u32());
  for (int& v : ck.shape.trunk) v = static_cast<int>(r.u32());
  if (ck.shape.encoder.empty() || ck.shape.trunk.empty() || ck.shape.encoder.size() > 64 || ck.shape.trunk.size() > 64) {
    throw ValidationError("corrupt checkpoint shape table");
  }
  ck.params = init_params<float>(ck.shape, 0);
  auto layers = ck.params.layers();
  if (r.u32() != layers.size()) throw ValidationError("checkpoint layer count mismatch");
  for (auto* l : layers) {
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (rows != l->w.rows() || cols != l->w.cols()) throw ValidationError("checkpoint layer shape mismatch");
  }
  for (auto* l : layers) {
    for (Eigen::Index i = 0; i < l->w.rows(); ++i) {
      for (Eigen::Index j = 0; j < l->w.cols(); ++j) l->w(i, j) = r.f32();
    }
    for (Eigen::Index i = 0; i < l->b.size(); ++i) l->b(i) = r.f32();
  }
  return ck;
}

template struct PolicyParamsT<float>;
template struct PolicyParamsT<double>;
template PolicyParamsT<double> PolicyParamsT<float>::cast<double>() const;
template PolicyParamsT<float> PolicyParamsT<double>::cast<float>() const;
template PolicyParamsT<float> init_params<float>(const PolicyShape&, std::uint64_t);
template PolicyParamsT<double> init_params<double>(const PolicyShape&, std::uint64_t);
template ForwardCache<float> policy_forward<float>(const PolicyParamsT<float>&, const PolicyShape&,
                                                   std::span<const Observation* const>, std::span<const ActionMask>,
                                                   PolicyMode, std::uint64_t);
template ForwardCache<double> policy_forward<double>(const PolicyParamsT<double>&, const PolicyShape&,
                                                     std::span<const Observation* const>, std::span<const ActionMask>,
                                                     PolicyMode, std::uint64_t);
template PolicyParamsT<float> policy_backward<float>(const PolicyParamsT<float>&, const ForwardCache<float>&,
                                                     const Eigen::MatrixXd&, const Eigen::VectorXd&);
template PolicyParamsT<double> policy_backward<double>(const PolicyParamsT<double>&, const ForwardCache<double>&,
                                                       const Eigen::MatrixXd&, const Eigen::VectorXd&);

}  // namespace passforge
