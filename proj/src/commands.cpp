#include "passforge/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "passforge/circuit_io.hpp"
#include "passforge/error.hpp"
#include "passforge/hashing.hpp"
#include "passforge/parallel.hpp"

namespace passforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string utc_stamp(const char* fmt) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out.precision(17);
  return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

json layout_json(const Layout& l) {
  return {{"initial", l.initial}, {"final", l.final}, {"idle_wires_contracted", l.idle_wires_contracted}};
}

json trace_names(const std::vector<int>& trace) {
  json out = json::array();
  for (int a : trace) out.push_back(a == kSkipAction ? std::string("SKIP") : std::string(pass_info(static_cast<PassId>(a)).name));
  return out;
}

Checkpoint load_policy(const RunConfig& cfg) {
  if (!cfg.checkpoint) throw ValidationError("config.checkpoint is required");
  const auto path = cfg.resolve(*cfg.checkpoint);
  if (!fs::exists(path)) throw ValidationError("checkpoint not found: " + path.string());
  auto ck = checkpoint_load(path.string(), cfg.env.observation_hash());
  const auto expect = PolicyShape::for_env(cfg.env);
  if (ck.shape.pre_in != expect.pre_in || ck.shape.post_in != expect.post_in || ck.shape.aux_in != expect.aux_in) {
    throw ValidationError("checkpoint shape does not match env");
  }
  return ck;
}

QuantumCircuit load_single_circuit(const RunConfig& cfg) {
  if (!cfg.circuit) throw ValidationError("config.circuit is required");
  const auto path = cfg.resolve(*cfg.circuit);
  if (!fs::exists(path)) throw ValidationError("circuit not found: " + path.string());
  return load_circuit_file(path.string());
}

void check_fits(const QuantumCircuit& c, const BackendModel& b, const std::string& name) {
  if (c.num_qubits() > b.num_physical()) {
    throw ValidationError("circuit " + name + " is wider than backend " + b.name());
  }
}

void write_trace(const fs::path& p, const QuantumCircuit& c, const BackendModel& b, const std::vector<int>& actions,
                 const EnvConfig& env_cfg) {
  EnvConfig e = env_cfg;
  e.use_reference = false;
  CompilationEnv env(e);
  env.reset(c, b);
  for (int a : actions) env.step(a);
  auto out = open_out(p);
  env.write_trace_jsonl(out);
}

struct EvalRow {
  std::string circuit;
  std::string method;
  QualityReport report;
  double tvd = std::nan("");
  double compile_ms = 0.0;
  double inference_ms = 0.0;
  Layout layout;
  QuantumCircuit compiled{1};
};

}  // namespace

std::string RunDir::comment_block(std::string_view prefix) const {
  std::ostringstream os;
  for (const auto& [k, v] : metadata.items()) os << prefix << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  return os.str();
}

RunDir make_run_dir(const RunConfig& cfg, std::string_view command) {
  const fs::path root = cfg.resolve(cfg.out);
  fs::create_directories(root);
  const std::string base = std::string(command) + "-" + utc_stamp("%Y%m%dT%H%M%SZ");
  RunDir r;
  for (int k = 0;; ++k) {
    r.path = root / (k == 0 ? base : base + "-" + std::to_string(k));
    if (fs::create_directory(r.path)) break;
    if (k > 1000) throw Error("cannot allocate a run directory under " + root.string());
  }
  r.metadata = {{"tool", kToolVersion},
                {"command", std::string(command)},
                {"config_hash", hex(cfg.hash())},
                {"seed", cfg.seed}};
  write_json(r.path / "metadata.json", r.metadata);
  write_json(r.path / "config.json", cfg.source);
  return r;
}

fs::path cmd_train(const RunConfig& cfg) {
  const auto pool = cfg.training_pool();
  const auto shape = PolicyShape::for_env(cfg.env);
  for (const auto& b : pool) {
    if (b.num_physical() < cfg.curriculum.max_qubits) throw ValidationError("backend smaller than curriculum.max_qubits");
  }
  const auto run = make_run_dir(cfg, "train");
  fs::create_directories(run.path / "checkpoints");
  auto log = open_out(run.path / "train_log.csv");
  log << run.comment_block() << train_log_header() << '\n';
  const std::uint64_t hash = cfg.env.observation_hash();

  TrainHooks hooks;
  hooks.dump_dir = (run.path / "dumps").string();
  hooks.on_update = [&](const TrainLogRow& row) {
    log << train_log_csv(row) << '\n';
    log.flush();
    std::cout << "update " << row.update << " steps " << row.env_steps << " esp_ratio " << row.mean_esp_ratio
              << " reward " << row.mean_episode_reward << '\n';
  };
  hooks.on_checkpoint = [&](int update, const PolicyParams& params) {
    std::ostringstream name;
    name << "update_" << std::setw(5) << std::setfill('0') << update << ".pfck";
    checkpoint_save(params, shape, hash, (run.path / "checkpoints" / name.str()).string());
  };
  const auto result = train(cfg.ppo, cfg.env, pool, cfg.curriculum, shape, hooks);
  checkpoint_save(result.params, shape, hash, (run.path / "policy.pfck").string());
  return run.path;
}

fs::path cmd_compile(const RunConfig& cfg) {
  const auto ck = load_policy(cfg);
  const auto circuit = load_single_circuit(cfg);
  const auto backend = cfg.load_backends().front();
  check_fits(circuit, backend, *cfg.circuit);
  if (circuit.num_qubits() > cfg.env.q_max) throw ValidationError("circuit wider than env.q_max");

  const auto inf = infer_pipeline(ck.params, ck.shape, circuit, backend, cfg.env);
  const auto run = make_run_dir(cfg, "compile");
  open_out(run.path / "compiled.qasm") << serialize_qasm_subset(inf.result.circuit, run.comment_block(""));
  json report{{"metadata", run.metadata},
              {"backend", backend.name()},
              {"report", to_json(inf.result.report)},
              {"layout", layout_json(inf.result.layout)},
              {"compile_ms", inf.result.compile_seconds * 1e3},
              {"inference_ms", inf.inference_seconds * 1e3},
              {"trace", trace_names(inf.result.trace)}};
  write_json(run.path / "report.json", report);
  write_trace(run.path / "trace.jsonl", circuit, backend, inf.result.trace, cfg.env);
  return run.path;
}

fs::path cmd_eval(const RunConfig& cfg) {
  const auto corpus = cfg.load_corpus();
  if (corpus.empty()) throw ValidationError("eval corpus is empty");
  const auto backend = cfg.load_backends().front();
  const auto& methods = cfg.eval.methods;
  const bool with_policy = std::find(methods.begin(), methods.end(), "policy") != methods.end();
  std::optional<Checkpoint> ck;
  if (with_policy) ck = load_policy(cfg);
  for (const auto& nc : corpus) {
    check_fits(nc.circuit, backend, nc.name);
    if (with_policy && nc.circuit.num_qubits() > cfg.env.q_max) {
      throw ValidationError("circuit " + nc.name + " wider than env.q_max");
    }
  }
  const auto run = make_run_dir(cfg, "eval");

  EnvConfig search_env = cfg.env;
  search_env.use_reference = false;
  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus[i].circuit;
    for (const auto& m : methods) {
      EvalRow row;
      row.circuit = corpus[i].name;
      row.method = m;
      CompileResult r;
      if (m == "policy") {
        const auto inf = infer_pipeline(ck->params, ck->shape, c, backend, cfg.env);
        r = inf.result;
        row.inference_ms = inf.inference_seconds * 1e3;
      } else if (m == "fidelity_optimized") {
        r = fixed_pipeline(FixedPipeline::FidelityOptimized, c, backend, cfg.env.pass_options);
      } else if (m == "time_optimized") {
        r = fixed_pipeline(FixedPipeline::TimeOptimized, c, backend, cfg.env.pass_options);
      } else if (m == "random") {
        r = random_select(c, backend, derive_seed(cfg.seed, i), search_env);
      } else if (m == "greedy") {
        r = greedy_select(c, backend, search_env);
      } else {
        const auto es = evolution_strategy(c, backend, cfg.eval.es_budget, derive_seed(cfg.seed, i),
                                           cfg.env.pass_options);
        r = es.best;
        r.compile_seconds = es.search_seconds;
      }
      row.report = r.report;
      row.compile_ms = r.compile_seconds * 1e3;
      row.layout = r.layout;
      row.compiled = std::move(r.circuit);
      rows.push_back(std::move(row));
    }
  }

  std::vector<Distribution> ideal(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    if (corpus[i].circuit.num_qubits() <= kMaxSimulatedQubits) ideal[i] = ideal_distribution(corpus[i].circuit);
  });
  parallel_for(rows.size(), [&](std::size_t k) {
    const std::size_t i = k / methods.size();
    if (corpus[i].circuit.num_qubits() > kMaxSimulatedQubits) return;
    NoiseConfig nc = cfg.noise;
    nc.seed = derive_seed(cfg.noise.seed, i);
    rows[k].tvd = tvd(ideal[i], noisy_distribution(rows[k].compiled, backend, rows[k].layout, nc));
  });

  auto csv = open_out(run.path / "eval.csv");
  csv << run.comment_block() << "# backend: " << backend.name() << '\n';
  csv << "circuit,method,esp,tvd,gates_1q,gates_2q,depth,compile_ms,inference_ms\n";
  for (const auto& r : rows) {
    csv << r.circuit << ',' << r.method << ',' << r.report.esp << ',';
    if (!std::isnan(r.tvd)) csv << r.tvd;
    csv << ',' << r.report.gate_counts.one_qubit << ',' << r.report.gate_counts.two_qubit << ',' << r.report.depth
        << ',' << r.compile_ms << ',' << r.inference_ms << '\n';
  }

  struct Agg {
    double esp = 0, tvd = 0, ms = 0, inf_ms = 0;
    int n = 0, n_tvd = 0;
  };
  std::map<std::string, Agg> agg;
  for (const auto& r : rows) {
    auto& a = agg[r.method];
    a.esp += r.report.esp;
    a.ms += r.compile_ms;
    a.inf_ms += r.inference_ms;
    ++a.n;
    if (!std::isnan(r.tvd)) {
      a.tvd += r.tvd;
      ++a.n_tvd;
    }
  }
  json summary{{"metadata", run.metadata}, {"backend", backend.name()}, {"circuits", corpus.size()}};
  auto scsv = open_out(run.path / "summary.csv");
  scsv << run.comment_block()
       << "method,mean_esp,mean_tvd,mean_compile_ms,tvd_improvement_pct,compile_time_reduction_pct,inference_share\n";
  const auto ref = agg.find("fidelity_optimized");
  for (const auto& m : methods) {
    const auto& a = agg[m];
    const double esp_m = a.esp / a.n;
    const double tvd_m = a.n_tvd ? a.tvd / a.n_tvd : std::nan("");
    const double ms_m = a.ms / a.n;
    double tvd_pct = std::nan(""), ms_pct = std::nan("");
    if (ref != agg.end()) {
      const double ref_tvd = ref->second.n_tvd ? ref->second.tvd / ref->second.n_tvd : std::nan("");
      const double ref_ms = ref->second.ms / ref->second.n;
      if (ref_tvd > 0.0) tvd_pct = 100.0 * (ref_tvd - tvd_m) / ref_tvd;
      if (ref_ms > 0.0) ms_pct = 100.0 * (ref_ms - ms_m) / ref_ms;
    }
    const double share = a.ms > 0.0 ? a.inf_ms / a.ms : 0.0;
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    summary["methods"][m] = {{"mean_esp", esp_m},
                             {"mean_tvd", num(tvd_m)},
                             {"mean_compile_ms", ms_m},
                             {"tvd_improvement_pct", num(tvd_pct)},
                             {"compile_time_reduction_pct", num(ms_pct)},
                             {"inference_share", share}};
    scsv << m << ',' << esp_m << ',';
    if (!std::isnan(tvd_m)) scsv << tvd_m;
    scsv << ',' << ms_m << ',';
    if (!std::isnan(tvd_pct)) scsv << tvd_pct;
    scsv << ',';
    if (!std::isnan(ms_pct)) scsv << ms_pct;
    scsv << ',' << share << '\n';
  }
  write_json(run.path / "summary.json", summary);
  return run.path;
}

fs::path cmd_bruteforce(const RunConfig& cfg) {
  const auto circuit = load_single_circuit(cfg);
  const auto backend = cfg.load_backends().front();
  check_fits(circuit, backend, *cfg.circuit);
  const auto bf = brute_force_selective(circuit, backend, cfg.toggles, cfg.env.pass_options);
  const auto run = make_run_dir(cfg, "bruteforce");
  auto csv = open_out(run.path / "bruteforce.csv");
  csv << run.comment_block() << "# backend: " << backend.name() << '\n';
  write_brute_force_csv(csv, bf);
  json toggles = json::array();
  for (auto id : bf.toggles) toggles.push_back(pass_info(id).name);
  json best = json::array();
  for (std::size_t i = 0; i < bf.toggles.size(); ++i) {
    if ((bf.best_mask >> i) & 1U) best.push_back(pass_info(bf.toggles[i]).name);
  }
  write_json(run.path / "summary.json", {{"metadata", run.metadata},
                                         {"backend", backend.name()},
                                         {"toggles", toggles},
                                         {"best_mask", bf.best_mask},
                                         {"best_enabled", best},
                                         {"best", to_json(bf.best().report)},
                                         {"all_on", to_json(bf.rows[bf.all_on()].report)}});
  return run.path;
}

fs::path cmd_bench(const RunConfig& cfg) {
  const auto backend = cfg.load_backends().front();
  std::optional<Checkpoint> ck;
  if (cfg.checkpoint) ck = load_policy(cfg);
  const int widest = std::max(cfg.bench.train_qubits, *std::max_element(cfg.bench.qubits.begin(), cfg.bench.qubits.end()));
  if (widest > backend.num_physical()) throw ValidationError("bench width exceeds the backend");
  if (widest > cfg.env.q_max) throw ValidationError("bench width exceeds env.q_max");
  const auto run = make_run_dir(cfg, "bench");

  EnvConfig env = cfg.env;
  env.use_reference = false;
  auto csv = open_out(run.path / "bench.csv");
  csv << run.comment_block() << "# backend: " << backend.name() << '\n'
      << "# sequence source: " << (ck ? "policy" : "greedy") << " on train_qubits=" << cfg.bench.train_qubits << '\n';
  csv << "benchmark,qubits,method,esp,gates,gates_2q,depth,compile_ms\n";
  json sequences;
  for (auto kind : cfg.bench.kinds) {
    const auto small = benchmark_circuit(kind, cfg.bench.train_qubits);
    const auto learned = ck ? infer_pipeline(ck->params, ck->shape, small, backend, env).result.trace
                            : greedy_select(small, backend, env).trace;
    sequences[std::string(to_string(kind))] = trace_names(learned);
    for (int n : cfg.bench.qubits) {
      const auto c = benchmark_circuit(kind, n);
      const auto transferred = replay_actions(c, backend, learned, env);
      const auto fo = fixed_pipeline(FixedPipeline::FidelityOptimized, c, backend, cfg.env.pass_options);
      for (const auto* r : {&transferred, &fo}) {
        csv << to_string(kind) << ',' << n << ',' << (r == &fo ? "fidelity_optimized" : "transferred") << ','
            << r->report.esp << ',' << r->report.gate_counts.gates() << ',' << r->report.gate_counts.two_qubit << ','
            << r->report.depth << ',' << r->compile_seconds * 1e3 << '\n';
      }
    }
  }
  write_json(run.path / "sequences.json", {{"metadata", run.metadata}, {"sequences", sequences}});
  return run.path;
}

}  // namespace passforge
