#include "passforge/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "passforge/circuit_io.hpp"
#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object and rejects whatever was not asked for.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) throw ValidationError(ctx_ + ": expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(ctx_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError("unknown key " + ctx_ + "." + k);
    }
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

void read_env(const json& j, EnvConfig& e) {
  Reader r(j, "env");
  r.get("q_max", e.q_max);
  r.get("g_types", e.g_types);
  r.get("t_bins", e.t_bins);
  r.get("p_max", e.p_max);
  r.get("e_max", e.e_max);
  r.get("history_len", e.history_len);
  r.get("max_episode_steps", e.max_episode_steps);
  r.get("pass_timeout", e.pass_timeout);
  r.get("shaping_weight", e.shaping_weight);
  r.get("noop_penalty", e.noop_penalty);
  r.get("failure_penalty", e.failure_penalty);
  if (const auto* w = r.sub("reward_weights")) {
    Reader rw(*w, "env.reward_weights");
    rw.get("esp_weight", e.reward_weights.esp_weight);
    rw.get("gates_weight", e.reward_weights.gates_weight);
    rw.get("depth_weight", e.reward_weights.depth_weight);
    rw.get("clip", e.reward_weights.clip);
    rw.finish();
  }
  if (const auto* p = r.sub("passes")) {
    Reader rp(*p, "env.passes");
    rp.get("vf2_call_limit", e.pass_options.vf2_call_limit);
    rp.get("lookahead_beam", e.pass_options.lookahead_beam);
    rp.get("lookahead_depth", e.pass_options.lookahead_depth);
    rp.finish();
  }
  r.finish();
  e.pass_options.timeout_seconds = e.pass_timeout;
}

void read_ppo(const json& j, PpoConfig& p) {
  Reader r(j, "ppo");
  r.get("learning_rate", p.learning_rate);
  r.get("rollout_steps", p.rollout_steps);
  r.get("batch_size", p.batch_size);
  r.get("gamma", p.gamma);
  r.get("gae_lambda", p.gae_lambda);
  r.get("clip_epsilon", p.clip_epsilon);
  r.get("epochs_per_update", p.epochs_per_update);
  r.get("entropy_coef", p.entropy_coef);
  r.get("value_coef", p.value_coef);
  r.get("max_grad_norm", p.max_grad_norm);
  r.get("num_envs", p.num_envs);
  r.get("total_steps", p.total_steps);
  r.get("checkpoint_every", p.checkpoint_every);
  r.get("dropout_in_updates", p.dropout_in_updates);
  r.finish();
}

void read_curriculum(const json& j, Curriculum& c) {
  Reader r(j, "curriculum");
  r.get("min_qubits", c.min_qubits);
  r.get("max_qubits", c.max_qubits);
  r.get("min_depth_factor", c.min_depth_factor);
  r.get("max_depth_factor", c.max_depth_factor);
  r.finish();
  if (c.min_qubits < 1 || c.max_qubits < c.min_qubits) throw ValidationError("curriculum: bad qubit range");
  if (!(c.min_depth_factor > 0.0) || c.max_depth_factor < c.min_depth_factor) {
    throw ValidationError("curriculum: bad depth factors");
  }
}

BackendSpec read_backend(const json& j, const std::string& ctx) {
  BackendSpec s;
  Reader r(j, ctx);
  std::string file, topology, noise = "heterogeneous";
  r.get("file", file);
  r.get("topology", topology);
  r.get("qubits", s.qubits);
  r.get("noise", noise);
  r.get("noise_seed", s.noise_seed);
  r.get("spread", s.spread);
  r.finish();
  if (!file.empty() && !topology.empty()) throw ValidationError(ctx + ": give either file or topology");
  if (!file.empty()) {
    s.file = file;
    return s;
  }
  if (topology.empty()) throw ValidationError(ctx + ": needs file or topology");
  try {
    s.topology = topology_from_string(topology);
  } catch (const Error& e) {
    throw ValidationError(ctx + ".topology: " + e.what());
  }
  if (noise != "uniform" && noise != "heterogeneous") throw ValidationError(ctx + ".noise: uniform or heterogeneous");
  s.heterogeneous = noise == "heterogeneous";
  if (s.qubits < 2) throw ValidationError(ctx + ".qubits must be >= 2");
  return s;
}

CorpusSpec read_corpus(const json& j, const std::string& ctx) {
  CorpusSpec s;
  Reader r(j, ctx);
  std::string kind, benchmark;
  r.get("kind", kind);
  r.get("file", s.file);
  r.get("count", s.count);
  r.get("min_qubits", s.min_qubits);
  r.get("max_qubits", s.max_qubits);
  r.get("depth_factor", s.depth_factor);
  r.get("seed", s.seed);
  r.get("benchmark", benchmark);
  r.get("qubits", s.qubits);
  r.finish();
  if (kind == "file") {
    s.kind = CorpusSpec::Kind::File;
    if (s.file.empty()) throw ValidationError(ctx + ": file entry needs a path");
  } else if (kind == "random") {
    s.kind = CorpusSpec::Kind::Random;
    if (s.count < 0 || s.min_qubits < 1 || s.max_qubits < s.min_qubits || !(s.depth_factor > 0.0)) {
      throw ValidationError(ctx + ": bad random corpus parameters");
    }
  } else if (kind == "benchmark") {
    s.kind = CorpusSpec::Kind::Benchmark;
    try {
      s.benchmark = benchmark_kind_from_string(benchmark);
    } catch (const Error& e) {
      throw ValidationError(ctx + ".benchmark: " + e.what());
    }
  } else {
    throw ValidationError(ctx + ".kind must be file, random or benchmark");
  }
  return s;
}

void read_noise(const json& j, NoiseConfig& n) {
  Reader r(j, "noise");
  r.get("enabled", n.enabled);
  r.get("noise_scale", n.noise_scale);
  r.get("t1_t2_scale", n.t1_t2_scale);
  r.get("shots", n.shots);
  r.get("trajectories", n.trajectories);
  r.finish();
  if (n.noise_scale < 0.0 || !(n.t1_t2_scale > 0.0) || n.shots < 1 || n.trajectories < 1) {
    throw ValidationError("noise: scales must be nonnegative and shots, trajectories positive");
  }
}

std::vector<BenchmarkKind> read_kinds(const std::vector<std::string>& names, const std::string& ctx) {
  std::vector<BenchmarkKind> out;
  for (const auto& n : names) {
    try {
      out.push_back(benchmark_kind_from_string(n));
    } catch (const Error& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  c.source = j;
  Reader r(j, "config");
  if (const auto* e = r.sub("env")) read_env(*e, c.env);
  if (const auto* p = r.sub("ppo")) read_ppo(*p, c.ppo);
  if (const auto* cu = r.sub("curriculum")) read_curriculum(*cu, c.curriculum);
  if (const auto* b = r.sub("backends")) {
    if (!b->is_array() || b->empty()) throw ValidationError("config.backends must be a non-empty array");
    c.backends.clear();
    for (std::size_t i = 0; i < b->size(); ++i) {
      c.backends.push_back(read_backend((*b)[i], "backends[" + std::to_string(i) + "]"));
    }
  }
  r.get("train_perturbations", c.train_perturbations);
  if (c.train_perturbations < 0) throw ValidationError("config.train_perturbations must be >= 0");
  if (const auto* cs = r.sub("corpus")) {
    if (!cs->is_array()) throw ValidationError("config.corpus must be an array");
    for (std::size_t i = 0; i < cs->size(); ++i) {
      c.corpus.push_back(read_corpus((*cs)[i], "corpus[" + std::to_string(i) + "]"));
    }
  }
  if (const auto* n = r.sub("noise")) read_noise(*n, c.noise);
  std::string checkpoint, circuit;
  r.get("checkpoint", checkpoint);
  r.get("circuit", circuit);
  if (!checkpoint.empty()) c.checkpoint = checkpoint;
  if (!circuit.empty()) c.circuit = circuit;
  if (const auto* t = r.sub("toggles")) {
    std::vector<std::string> names;
    try {
      names = t->get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config.toggles: ") + e.what());
    }
    c.toggles.clear();
    for (const auto& n : names) {
      const auto id = pass_from_name(n);
      if (!id) throw ValidationError("config.toggles: unknown pass " + n);
      if (!is_toggleable(pass_info(*id).kind)) throw ValidationError("config.toggles: pass is not toggleable: " + n);
      c.toggles.push_back(*id);
    }
    if (c.toggles.size() > kMaxToggles) throw ValidationError("config.toggles: too many");
  }
  if (const auto* b = r.sub("bench")) {
    Reader rb(*b, "bench");
    std::vector<std::string> kinds;
    rb.get("kinds", kinds);
    rb.get("train_qubits", c.bench.train_qubits);
    rb.get("qubits", c.bench.qubits);
    rb.finish();
    if (b->contains("kinds")) c.bench.kinds = read_kinds(kinds, "bench.kinds");
    if (c.bench.kinds.empty() || c.bench.qubits.empty()) throw ValidationError("bench: kinds and qubits must be non-empty");
    if (c.bench.train_qubits < 2) throw ValidationError("bench.train_qubits must be >= 2");
  }
  if (const auto* e = r.sub("eval")) {
    Reader re(*e, "eval");
    re.get("methods", c.eval.methods);
    re.get("es_budget", c.eval.es_budget);
    re.finish();
    static const std::set<std::string> known{"policy", "fidelity_optimized", "time_optimized", "random", "greedy",
                                             "es"};
    if (c.eval.methods.empty()) throw ValidationError("eval.methods must be non-empty");
    for (const auto& m : c.eval.methods) {
      if (!known.count(m)) throw ValidationError("eval.methods: unknown method " + m);
    }
    if (c.eval.es_budget < 1) throw ValidationError("eval.es_budget must be >= 1");
  }
  std::uint64_t seed = 0;
  r.get("seed", seed);
  r.get("out", c.out);
  r.finish();

  c.env.validate();
  c.ppo.validate();
  if (c.curriculum.max_qubits > c.env.q_max) throw ValidationError("curriculum.max_qubits exceeds env.q_max");
  c.set_seed(seed);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  ppo.seed = s;
  noise.seed = derive_seed(s, 0x4E015E);
}

std::uint64_t RunConfig::hash() const {
  Fnv1a h;
  h.add(source.dump());
  h.add(seed);
  return h.value();
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<BackendModel> RunConfig::load_backends() const {
  std::vector<BackendModel> out;
  for (const auto& s : backends) {
    if (s.file) {
      out.push_back(load_calibration(resolve(*s.file).string()));
    } else if (s.heterogeneous) {
      out.push_back(synthetic_backend(s.topology, s.qubits, HeterogeneousNoise{s.noise_seed, s.spread, {}}));
    } else {
      out.push_back(synthetic_backend(s.topology, s.qubits, UniformNoise{}));
    }
  }
  for (const auto& b : out) {
    if (b.num_physical() > env.p_max || static_cast<int>(b.num_edges()) > env.e_max) {
      throw ValidationError("backend " + b.name() + " exceeds env.p_max or env.e_max");
    }
  }
  return out;
}

std::vector<BackendModel> RunConfig::training_pool() const {
  auto base = load_backends();
  std::vector<BackendModel> pool = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (int k = 0; k < train_perturbations; ++k) {
      pool.push_back(perturb(base[i], derive_seed(seed, 7000 + i * 1000 + static_cast<std::uint64_t>(k))));
    }
  }
  return pool;
}

std::vector<NamedCircuit> RunConfig::load_corpus() const {
  std::vector<NamedCircuit> out;
  for (const auto& s : corpus) {
    switch (s.kind) {
      case CorpusSpec::Kind::File: {
        const auto p = resolve(s.file);
        if (std::filesystem::is_directory(p)) {
          std::vector<std::filesystem::path> files;
          for (const auto& e : std::filesystem::directory_iterator(p)) {
            const auto ext = e.path().extension();
            if (ext == ".qasm" || ext == ".json") files.push_back(e.path());
          }
          std::sort(files.begin(), files.end());
          for (const auto& f : files) out.push_back({f.filename().string(), load_circuit_file(f.string())});
        } else {
          out.push_back({p.filename().string(), load_circuit_file(p.string())});
        }
        break;
      }
      case CorpusSpec::Kind::Random:
        for (int i = 0; i < s.count; ++i) {
          const int n = s.min_qubits + i % (s.max_qubits - s.min_qubits + 1);
          const int depth = std::max(1, static_cast<int>(std::lround(s.depth_factor * n)));
          const auto seed_i = derive_seed(s.seed, static_cast<std::uint64_t>(i));
          out.push_back({"random_" + std::to_string(s.seed) + "_" + std::to_string(i), random_circuit(n, depth, seed_i)});
        }
        break;
      case CorpusSpec::Kind::Benchmark:
        for (int n : s.qubits) {
          out.push_back({std::string(to_string(s.benchmark)) + "_" + std::to_string(n), benchmark_circuit(s.benchmark, n)});
        }
        break;
    }
  }
  return out;
}

}  // namespace passforge
