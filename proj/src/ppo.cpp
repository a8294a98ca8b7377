#include "passforge/ppo.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "passforge/error.hpp"
#include "passforge/generators.hpp"
#include "passforge/hashing.hpp"
#include "passforge/parallel.hpp"

namespace passforge {

void PpoConfig::validate() const {
  if (rollout_steps <= 0 || batch_size <= 0 || num_envs <= 0 || epochs_per_update <= 0) {
    throw ValidationError("rollout_steps, batch_size, num_envs and epochs_per_update must be positive");
  }
  if (rollout_steps % batch_size != 0) throw ValidationError("rollout_steps must be a multiple of batch_size");
  if (rollout_steps % num_envs != 0) throw ValidationError("rollout_steps must be a multiple of num_envs");
  if (total_steps < rollout_steps) throw ValidationError("total_steps must be at least rollout_steps");
  if (!(learning_rate > 0.0) || !(clip_epsilon > 0.0)) throw ValidationError("learning_rate and clip_epsilon must be > 0");
  if (gamma < 0.0 || gamma > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw ValidationError("gamma and gae_lambda must lie in [0, 1]");
  }
  if (entropy_coef < 0.0 || value_coef < 0.0) throw ValidationError("loss coefficients must be nonnegative");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, const std::vector<bool>& dones,
                      double gamma, double lambda, double last_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ValidationError("GAE inputs differ in length");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

template <typename S>
LossBreakdown ppo_loss(const PolicyParamsT<S>& params, const PolicyShape& shape, const PpoBatch& batch,
                       const PpoConfig& cfg, PolicyMode mode, std::uint64_t dropout_seed, PolicyParamsT<S>* grad) {
  const std::size_t n = batch.observations.size();
  if (n == 0 || batch.masks.size() != n || batch.actions.size() != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n) {
    throw ValidationError("malformed PPO batch");
  }
  const auto cache = policy_forward<S>(params, shape, batch.observations, batch.masks, mode, dropout_seed);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = cfg.clip_epsilon;
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(shape.actions, static_cast<Eigen::Index>(n));
  Eigen::VectorXd dvalues = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  LossBreakdown out;

  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const int a = batch.actions[i];
    if (a < 0 || a >= shape.actions || !batch.masks[i].test(static_cast<std::size_t>(a))) {
      throw ContractError("batch action outside its mask");
    }
    const double logp = cache.log_probs(a, col);
    const double log_ratio = logp - batch.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    out.policy -= clipped_surrogate(ratio, adv, eps) * inv_n;
    out.approx_kl += (ratio - 1.0 - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > eps) out.clip_fraction += inv_n;

    // d(surrogate)/d(log pi_a): nonzero only where the unclipped branch is the minimum.
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    const double g = unclipped <= clipped ? unclipped : 0.0;

    double h = 0.0;
    for (int k = 0; k < shape.actions; ++k) {
      const double p = cache.probs(k, col);
      if (p > 0.0) h -= p * cache.log_probs(k, col);
    }
    out.entropy += h * inv_n;
    for (int k = 0; k < shape.actions; ++k) {
      if (!batch.masks[i].test(static_cast<std::size_t>(k))) continue;
      const double p = cache.probs(k, col);
      const double lp = cache.log_probs(k, col);
      dlogits(k, col) = -inv_n * g * ((k == a ? 1.0 : 0.0) - p) + cfg.entropy_coef * inv_n * p * (lp + h);
    }

    const double diff = cache.values(col) - batch.returns[i];
    out.value += diff * diff * inv_n;
    dvalues(col) = 2.0 * cfg.value_coef * diff * inv_n;
  }
  out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
  if (grad) *grad = policy_backward<S>(params, cache, dlogits, dvalues);
  return out;
}

template LossBreakdown ppo_loss<float>(const PolicyParamsT<float>&, const PolicyShape&, const PpoBatch&,
                                       const PpoConfig&, PolicyMode, std::uint64_t, PolicyParamsT<float>*);
template LossBreakdown ppo_loss<double>(const PolicyParamsT<double>&, const PolicyShape&, const PpoBatch&,
                                        const PpoConfig&, PolicyMode, std::uint64_t, PolicyParamsT<double>*);

Adam::Adam(const PolicyParams& like, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(like.zeros_like()), v_(like.zeros_like()) {}

double Adam::step(PolicyParams& params, PolicyParams grads, double max_norm) {
  double sq = 0.0;
  for (const auto* l : std::as_const(grads).layers()) {
    sq += l->w.template cast<double>().squaredNorm() + l->b.template cast<double>().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw Error("non-finite gradient norm");
  const float scale = max_norm > 0.0 && norm > max_norm ? static_cast<float>(max_norm / norm) : 1.0f;

  ++t_;
  const auto b1 = static_cast<float>(beta1_);
  const auto b2 = static_cast<float>(beta2_);
  const auto c1 = static_cast<float>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const auto c2 = static_cast<float>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
  const auto lr = static_cast<float>(lr_);
  const auto eps = static_cast<float>(eps_);

  auto p = params.layers();
  auto g = grads.layers();
  auto m = m_.layers();
  auto v = v_.layers();
  auto update = [&](auto& theta, auto& grad, auto& mom, auto& var) {
    grad *= scale;
    mom = b1 * mom + (1.0f - b1) * grad;
    var = b2 * var + (1.0f - b2) * grad.cwiseProduct(grad);
    theta.array() -= lr * (mom.array() / c1) / ((var.array() / c2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < p.size(); ++k) {
    update(p[k]->w, g[k]->w, m[k]->w, v[k]->w);
    update(p[k]->b, g[k]->b, m[k]->b, v[k]->b);
  }
  return norm;
}

std::string train_log_header() {
  return "update,env_steps,episodes,mean_episode_reward,mean_esp_ratio,mean_episode_length,policy_loss,value_loss,"
         "entropy,approx_kl,clip_fraction";
}

std::string train_log_csv(const TrainLogRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.update << ',' << r.env_steps << ',' << r.episodes << ',' << r.mean_episode_reward << ','
     << r.mean_esp_ratio << ',' << r.mean_episode_length << ',' << r.policy_loss << ',' << r.value_loss << ','
     << r.entropy << ',' << r.approx_kl << ',' << r.clip_fraction;
  return os.str();
}

namespace {

struct Transition {
  Observation obs;
  ActionMask mask;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeStats {
  double reward = 0.0;
  double esp_ratio = 0.0;
  int length = 0;
};

struct Worker {
  CompilationEnv env;
  std::mt19937_64 rng;
  std::size_t index = 0;
  long episode = 0;
  Observation obs;
  double reward = 0.0;
  int length = 0;
  std::vector<Transition> buffer;
  std::vector<EpisodeStats> finished;
  double last_value = 0.0;
};

QuantumCircuit sample_circuit(const Curriculum& cur, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> width(cur.min_qubits, cur.max_qubits);
  const int n = width(rng);
  const int lo = std::max(1, static_cast<int>(std::lround(cur.min_depth_factor * n)));
  const int hi = std::max(lo, static_cast<int>(std::lround(cur.max_depth_factor * n)));
  std::uniform_int_distribution<int> depth(lo, hi);
  const int d = depth(rng);
  return random_circuit(n, d, rng());
}

void start_episode(Worker& w, const std::vector<BackendModel>& pool, std::size_t num_envs, const Curriculum& cur) {
  const auto& b = pool[(static_cast<std::size_t>(w.episode) * num_envs + w.index) % pool.size()];
  w.obs = w.env.reset(sample_circuit(cur, w.rng), b);
  w.reward = 0.0;
  w.length = 0;
}

int sample_action(const PolicyOutput& out, const ActionMask& mask, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last = -1;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask.test(static_cast<std::size_t>(a))) continue;
    last = a;
    acc += out.probs[static_cast<std::size_t>(a)];
    if (u < acc) return a;
  }
  if (last < 0) throw ContractError("empty action mask");
  return last;
}

void rollout(Worker& w, const PolicyParams& params, const PolicyShape& shape, int steps,
             const std::vector<BackendModel>& pool, std::size_t num_envs, const Curriculum& cur) {
  w.buffer.clear();
  w.finished.clear();
  for (int t = 0; t < steps; ++t) {
    Transition tr;
    tr.mask = w.env.action_mask();
    const auto out = evaluate_policy(params, shape, w.obs, tr.mask);
    tr.action = sample_action(out, tr.mask, w.rng);
    tr.log_prob = std::log(out.probs[static_cast<std::size_t>(tr.action)]);
    tr.value = out.value;
    auto res = w.env.step(tr.action);
    tr.reward = res.reward;
    tr.done = res.done;
    tr.obs = std::move(w.obs);
    w.reward += res.reward;
    ++w.length;
    w.buffer.push_back(std::move(tr));
    if (res.done) {
      EpisodeStats st{w.reward, 0.0, w.length};
      if (w.env.reference() && w.env.reference()->esp > 0.0) {
        st.esp_ratio = w.env.final_report().esp / w.env.reference()->esp;
      }
      w.finished.push_back(st);
      ++w.episode;
      start_episode(w, pool, num_envs, cur);
    } else {
      w.obs = std::move(res.observation);
    }
  }
  w.last_value = evaluate_policy(params, shape, w.obs, w.env.action_mask()).value;
}

void dump_failure(const std::string& dir, int update, int minibatch, const LossBreakdown& loss,
                  const PolicyParams& params, const PolicyShape& shape, std::uint64_t hash) {
  std::filesystem::create_directories(dir);
  nlohmann::json j{{"update", update},       {"minibatch", minibatch},   {"total", loss.total},
                   {"policy", loss.policy},  {"value", loss.value},      {"entropy", loss.entropy},
                   {"approx_kl", loss.approx_kl}};
  std::ofstream(std::filesystem::path(dir) / "nan_dump.json") << j.dump(2) << '\n';
  checkpoint_save(params, shape, hash, (std::filesystem::path(dir) / "nan_params.pfck").string());
}

}  // namespace

TrainResult train(const PpoConfig& cfg, const EnvConfig& env_cfg, const std::vector<BackendModel>& backend_pool,
                  const Curriculum& curriculum, const PolicyShape& shape, const TrainHooks& hooks) {
  cfg.validate();
  env_cfg.validate();
  if (backend_pool.empty()) throw ValidationError("backend pool is empty");
  if (curriculum.min_qubits < 1 || curriculum.max_qubits < curriculum.min_qubits ||
      curriculum.max_qubits > env_cfg.q_max) {
    throw ValidationError("curriculum widths must lie in [1, q_max]");
  }
  for (const auto& b : backend_pool) {
    if (b.num_physical() < curriculum.max_qubits) throw ValidationError("backend smaller than the curriculum width");
  }
  if (shape.pre_in != env_cfg.pre_tensor_size() ||
      shape.post_in != env_cfg.post_tensor_size()) {
    throw ValidationError("policy shape does not match the environment");
  }

  const auto num_envs = static_cast<std::size_t>(cfg.num_envs);
  const int steps_per_env = cfg.rollout_steps / cfg.num_envs;
  const std::uint64_t hash = env_cfg.observation_hash();

  TrainResult result;
  result.shape = shape;
  result.params = init_params<float>(shape, derive_seed(cfg.seed, 0x5EED));
  Adam adam(result.params, cfg.learning_rate);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5A1F));

  std::vector<Worker> workers(num_envs);
  for (std::size_t e = 0; e < num_envs; ++e) {
    workers[e].env = CompilationEnv(env_cfg);
    workers[e].rng.seed(derive_seed(cfg.seed, 1000 + e));
    workers[e].index = e;
    start_episode(workers[e], backend_pool, num_envs, curriculum);
  }

  long env_steps = 0;
  for (int update = 1; update <= cfg.num_updates(); ++update) {
    const PolicyParams& frozen = result.params;
    parallel_for(num_envs, [&](std::size_t e) {
      rollout(workers[e], frozen, shape, steps_per_env, backend_pool, num_envs, curriculum);
    });
    env_steps += cfg.rollout_steps;

    PpoBatch all;
    TrainLogRow row;
    row.update = update;
    row.env_steps = env_steps;
    for (auto& w : workers) {
      std::vector<double> rewards, values;
      std::vector<bool> dones;
      for (const auto& tr : w.buffer) {
        rewards.push_back(tr.reward);
        values.push_back(tr.value);
        dones.push_back(tr.done);
      }
      const auto gae = compute_gae(rewards, values, dones, cfg.gamma, cfg.gae_lambda, w.last_value);
      for (std::size_t k = 0; k < w.buffer.size(); ++k) {
        const auto& tr = w.buffer[k];
        all.observations.push_back(&tr.obs);
        all.masks.push_back(tr.mask);
        all.actions.push_back(tr.action);
        all.old_log_probs.push_back(tr.log_prob);
        all.advantages.push_back(gae.advantages[k]);
        all.returns.push_back(gae.returns[k]);
      }
      for (const auto& st : w.finished) {
        ++row.episodes;
        row.mean_episode_reward += st.reward;
        row.mean_esp_ratio += st.esp_ratio;
        row.mean_episode_length += st.length;
      }
    }
    if (row.episodes > 0) {
      row.mean_episode_reward /= row.episodes;
      row.mean_esp_ratio /= row.episodes;
      row.mean_episode_length /= row.episodes;
    }

    const double n = static_cast<double>(all.advantages.size());
    const double mean = std::accumulate(all.advantages.begin(), all.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : all.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : all.advantages) a = (a - mean) / (sd + 1e-8);

    std::vector<std::size_t> order(all.advantages.size());
    const auto mode = cfg.dropout_in_updates ? PolicyMode::Train : PolicyMode::Eval;
    int minibatches = 0;
    LossBreakdown sum;
    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        PpoBatch mb;
        for (std::size_t k = start; k < start + static_cast<std::size_t>(cfg.batch_size); ++k) {
          const auto idx = order[k];
          mb.observations.push_back(all.observations[idx]);
          mb.masks.push_back(all.masks[idx]);
          mb.actions.push_back(all.actions[idx]);
          mb.old_log_probs.push_back(all.old_log_probs[idx]);
          mb.advantages.push_back(all.advantages[idx]);
          mb.returns.push_back(all.returns[idx]);
        }
        PolicyParams grad;
        const auto seed = derive_seed(cfg.seed, (static_cast<std::uint64_t>(update) << 32) |
                                                    static_cast<std::uint64_t>(minibatches));
        const auto loss = ppo_loss<float>(result.params, shape, mb, cfg, mode, seed, &grad);
        if (!std::isfinite(loss.total)) {
          if (hooks.dump_dir) dump_failure(*hooks.dump_dir, update, minibatches, loss, result.params, shape, hash);
          throw Error("non-finite PPO loss at update " + std::to_string(update));
        }
        adam.step(result.params, std::move(grad), cfg.max_grad_norm);
        sum.policy += loss.policy;
        sum.value += loss.value;
        sum.entropy += loss.entropy;
        sum.approx_kl += loss.approx_kl;
        sum.clip_fraction += loss.clip_fraction;
        ++minibatches;
      }
    }
    row.policy_loss = sum.policy / minibatches;
    row.value_loss = sum.value / minibatches;
    row.entropy = sum.entropy / minibatches;
    row.approx_kl = sum.approx_kl / minibatches;
    row.clip_fraction = sum.clip_fraction / minibatches;
    result.log.push_back(row);
    if (hooks.on_update) hooks.on_update(row);
    const bool last = update == cfg.num_updates();
    if (hooks.on_checkpoint && (last || (cfg.checkpoint_every > 0 && update % cfg.checkpoint_every == 0))) {
      hooks.on_checkpoint(update, result.params);
    }
  }
  return result;
}

namespace {

// Multiplicative mix; only used to detect revisited states within one episode.
std::uint64_t state_key(const CompilationEnv& env) {
  constexpr std::uint64_t k = 0x9E3779B97F4A7C15ULL;
  std::uint64_t h = static_cast<std::uint64_t>(env.stage()) + 1;
  auto mix = [&h](std::uint64_t v) { h = (h ^ v) * k; h ^= h >> 32; };
  for (const auto& inst : env.circuit().instructions()) {
    const auto q = [&](int i) { return static_cast<std::uint64_t>(inst.qubits[static_cast<std::size_t>(i)] + 1) & 0xFFFF; };
    std::uint64_t v = static_cast<std::uint64_t>(inst.kind) | q(0) << 8 | q(1) << 24 | q(2) << 40;
    if (inst.kind == GateKind::RZ) v ^= std::bit_cast<std::uint64_t>(inst.angle) * k;
    if (inst.kind == GateKind::MEASURE) v ^= static_cast<std::uint64_t>(inst.clbit) << 56;
    mix(v);
  }
  if (const auto& l = env.layout()) {
    for (int p : l->initial) mix(static_cast<std::uint64_t>(p));
    mix(~0ULL);
    for (int p : l->final) mix(static_cast<std::uint64_t>(p));
  }
  return splitmix64(h);
}

}  // namespace

InferenceResult infer_pipeline(const PolicyParams& params, const PolicyShape& shape, const QuantumCircuit& c,
                               const BackendModel& b, const EnvConfig& env_cfg) {
  using Clock = std::chrono::steady_clock;
  EnvConfig cfg = env_cfg;
  cfg.use_reference = false;
  const auto start = Clock::now();
  CompilationEnv env(cfg);
  Observation obs = env.reset(c, b);
  double inference = 0.0;
  std::unordered_map<std::uint64_t, ActionMask> tried;
  PolicyEvaluator policy(params, shape);
  while (!env.done()) {
    const auto mask = env.action_mask();
    const auto t0 = Clock::now();
    ActionMask& seen = tried[state_key(env)];
    const ActionMask fresh = mask & ~seen;
    const ActionMask& allowed = fresh.any() ? fresh : mask;
    int a = 0;
    if (allowed.count() == 1) {
      while (!allowed[static_cast<std::size_t>(a)]) ++a;
    } else {
      a = greedy_action(policy(obs, mask), allowed);
    }
    seen.set(static_cast<std::size_t>(a));
    inference += std::chrono::duration<double>(Clock::now() - t0).count();
    obs = env.step(a).observation;
  }
  InferenceResult r;
  r.result = collect_episode(env, std::chrono::duration<double>(Clock::now() - start).count());
  r.inference_seconds = inference;
  return r;
}

}  // namespace passforge
