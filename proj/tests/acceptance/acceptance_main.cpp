// Acceptance harness: one PASS/FAIL line per criterion.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "passforge/baselines.hpp"
#include "passforge/error.hpp"
#include "passforge/generators.hpp"
#include "passforge/hashing.hpp"
#include "passforge/parallel.hpp"
#include "passforge/ppo.hpp"
#include "passforge/simulator.hpp"

using namespace passforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BackendModel heavyhex_file() { return load_calibration(std::string(PASSFORGE_DATA_DIR) + "/backends/heavyhex_12.json"); }

EnvConfig no_reference() {
  EnvConfig e;
  e.use_reference = false;
  return e;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

bool equivalent(const Distribution& ref, const QuantumCircuit& c) { return tvd(ref, ideal_distribution(c)) <= 1e-9; }

// 1 -------------------------------------------------------------------------
Verdict validity() {
  const auto b = synthetic_backend(Topology::HeavyHexFragment, 12, HeterogeneousNoise{3, 0.5, {}});
  const int episodes = 1000;
  std::vector<char> ok(episodes, 0);
  parallel_for(episodes, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(101, i));
    const int n = 4 + static_cast<int>(rng() % 5);
    const int depth = n * (2 + static_cast<int>(rng() % 3));
    const auto c = random_circuit(n, depth, rng());
    const auto r = random_select(c, b, derive_seed(202, i), no_reference());
    ok[i] = is_executable(r.circuit, b) && r.layout.valid_for(b.num_physical());
  });
  const int good = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
  return {good == episodes, fmt("%d/%d random masked episodes executable", good, episodes)};
}

// 2 -------------------------------------------------------------------------
std::vector<QuantumCircuit> small_corpus() {
  std::vector<QuantumCircuit> out;
  for (int n = 3; n <= 6; ++n) {
    for (auto k : {BenchmarkKind::GHZ, BenchmarkKind::QFT, BenchmarkKind::QPE, BenchmarkKind::DeutschJozsa}) {
      out.push_back(benchmark_circuit(k, n));
    }
  }
  out.push_back(benchmark_circuit(BenchmarkKind::Grover, 2));
  out.push_back(benchmark_circuit(BenchmarkKind::Grover, 3));
  out.push_back(deutsch_jozsa(4, DjOracle::Balanced));
  out.push_back(deutsch_jozsa(5, DjOracle::Balanced));
  for (int i = 0; out.size() < 200; ++i) {
    const int n = 2 + i % 5;
    out.push_back(random_circuit(n, n * (2 + i % 4), derive_seed(303, static_cast<std::uint64_t>(i))));
  }
  return out;
}

Verdict semantic_preservation() {
  const auto b = heavyhex_file();
  const auto corpus = small_corpus();
  const auto shape = PolicyShape::for_env(EnvConfig{});
  const auto untrained = init_params<float>(shape, 5);
  std::vector<std::array<int, kNumPasses>> applied(corpus.size());
  std::vector<int> bad(corpus.size(), 0);
  std::vector<std::string> first_bad(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    const auto& c = corpus[i];
    const auto ref = ideal_distribution(c);
    applied[i].fill(0);
    auto fail = [&](const std::string& what) {
      if (!bad[i]++) first_bad[i] = what;
    };
    CompilationEnv env(no_reference());
    env.reset(c, b);
    std::mt19937_64 rng(derive_seed(404, i));
    while (!env.done()) {
      const auto mask = env.action_mask();
      std::vector<int> valid;
      for (int a = 0; a < kNumActions; ++a) {
        if (!mask.test(static_cast<std::size_t>(a))) continue;
        valid.push_back(a);
        if (a == kSkipAction) continue;
        CompilationEnv probe = env;
        const auto r = probe.step(a);
        if (r.info.failed) continue;
        ++applied[i][static_cast<std::size_t>(a)];
        if (!equivalent(ref, probe.circuit())) fail(std::string(pass_info(static_cast<PassId>(a)).name));
      }
      env.step(valid[rng() % valid.size()]);
      if (!equivalent(ref, env.circuit())) fail("episode step");
    }
    const std::pair<const char*, CompileResult> pipelines[] = {
        {"fidelity_optimized", fixed_pipeline(FixedPipeline::FidelityOptimized, c, b)},
        {"time_optimized", fixed_pipeline(FixedPipeline::TimeOptimized, c, b)},
        {"random_select", random_select(c, b, i, no_reference())},
        {"greedy_select", greedy_select(c, b, no_reference())},
        {"policy", infer_pipeline(untrained, shape, c, b, EnvConfig{}).result},
    };
    for (const auto& [name, r] : pipelines) {
      if (!equivalent(ref, r.circuit)) fail(name);
    }
    const auto es = evolution_strategy(c, b, 4, i);
    if (!equivalent(ref, es.best.circuit)) fail("evolution_strategy");
  });
  std::array<int, kNumPasses> totals{};
  for (const auto& a : applied) {
    for (int p = 0; p < kNumPasses; ++p) totals[static_cast<std::size_t>(p)] += a[static_cast<std::size_t>(p)];
  }
  std::vector<std::string> unexercised;
  for (int p = 0; p < kNumPasses; ++p) {
    if (totals[static_cast<std::size_t>(p)] == 0) unexercised.emplace_back(pass_info(static_cast<PassId>(p)).name);
  }
  const int failures = std::accumulate(bad.begin(), bad.end(), 0);
  std::string detail = fmt("%zu circuits, %d mismatches, %d/%d passes exercised", corpus.size(), failures,
                           kNumPasses - static_cast<int>(unexercised.size()), kNumPasses);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (bad[i]) {
      detail += "; first mismatch: " + first_bad[i];
      break;
    }
  }
  for (const auto& u : unexercised) detail += "; never applied: " + u;
  return {failures == 0 && unexercised.empty(), detail};
}

// 3 -------------------------------------------------------------------------
Verdict esp_tvd_correlation() {
  const auto b = heavyhex_file();
  const int circuits = 60;
  std::vector<double> esps(static_cast<std::size_t>(circuits) * 4), tvds(esps.size());
  parallel_for(static_cast<std::size_t>(circuits), [&](std::size_t i) {
    const int n = 3 + static_cast<int>(i % 4);
    const auto c = random_circuit(n, n * (2 + static_cast<int>(i % 4)), derive_seed(505, i));
    const auto ref = ideal_distribution(c);
    const CompileResult rs[] = {fixed_pipeline(FixedPipeline::FidelityOptimized, c, b),
                                fixed_pipeline(FixedPipeline::TimeOptimized, c, b),
                                random_select(c, b, derive_seed(506, i), no_reference()),
                                random_select(c, b, derive_seed(507, i), no_reference())};
    for (std::size_t k = 0; k < 4; ++k) {
      NoiseConfig nc;
      nc.noise_scale = 1.0;
      nc.shots = 4096;
      nc.seed = derive_seed(508, i * 4 + k);
      esps[i * 4 + k] = rs[k].report.esp;
      tvds[i * 4 + k] = tvd(ref, noisy_distribution(rs[k].circuit, b, rs[k].layout, nc));
    }
  });
  const double rho = spearman(esps, tvds);
  return {rho <= -0.5, fmt("Spearman(ESP, TVD) = %.3f over %zu pairs at 4096 shots (need <= -0.5)", rho, esps.size())};
}

// 4, 5 ----------------------------------------------------------------------
struct BenchCase {
  std::string name;
  QuantumCircuit circuit;
};

std::vector<BenchCase> fig2_corpus() {
  return {{"GHZ_5", benchmark_circuit(BenchmarkKind::GHZ, 5)},
          {"QFT_4", benchmark_circuit(BenchmarkKind::QFT, 4)},
          {"QFT_6", benchmark_circuit(BenchmarkKind::QFT, 6)},
          {"QPE_5", benchmark_circuit(BenchmarkKind::QPE, 5)},
          {"DJ_5", benchmark_circuit(BenchmarkKind::DeutschJozsa, 5)},
          {"Grover_3", benchmark_circuit(BenchmarkKind::Grover, 3)},
          {"random_6", random_circuit(6, 18, 42)},
          {"random_8", random_circuit(8, 24, 43)}};
}

Verdict brute_force_reproduction() {
  const auto b = heavyhex_file();
  const auto toggles = default_toggles();
  bool superset = true;
  std::set<std::uint32_t> bests;
  std::ostringstream masks;
  for (const auto& bc : fig2_corpus()) {
    const auto bf = brute_force_selective(bc.circuit, b, toggles);
    const auto fo = fixed_pipeline(FixedPipeline::FidelityOptimized, bc.circuit, b);
    superset = superset && bf.rows.size() == 32 && bf.best().report.esp >= fo.report.esp;
    bests.insert(bf.best_mask);
    masks << ' ' << bc.name << '=' << bf.best_mask;
  }
  return {superset && bests.size() >= 2,
          fmt("superset %s, %zu distinct best configs over %zu circuits;", superset ? "holds" : "violated", bests.size(),
              fig2_corpus().size()) +
              masks.str()};
}

Verdict greedy_diagnostic() {
  const auto b = heavyhex_file();
  auto corpus = fig2_corpus();
  for (int i = 0; i < 24; ++i) {
    const int n = 4 + i % 5;
    corpus.push_back({"random_" + std::to_string(i), random_circuit(n, 3 * n, derive_seed(606, i))});
  }
  int found = 0;
  std::string example;
  for (const auto& bc : corpus) {
    const auto g = greedy_select(bc.circuit, b, no_reference());
    const auto bf = brute_force_selective(bc.circuit, b, default_toggles());
    if (!(g.report.esp < bf.best().report.esp)) continue;
    for (int s = 0; s < kNumStages; ++s) {
      const auto gs = g.stage_proxy[static_cast<std::size_t>(s)];
      const auto bs = bf.best_stage_proxy[static_cast<std::size_t>(s)];
      if (gs && bs && *gs >= *bs) {
        if (!found++) {
          example = fmt("%s: greedy %s proxy %.4f >= %.4f but final ESP %.4f < %.4f", bc.name.c_str(),
                        std::string(stage_name(static_cast<Stage>(s))).c_str(), *gs, *bs, g.report.esp,
                        bf.best().report.esp);
        }
        break;
      }
    }
  }
  // Diagnostic: reports whether the cross-stage effect occurred, passes either way.
  if (found) return {true, fmt("cross-stage effect on %d/%zu circuits; e.g. ", found, corpus.size()) + example};
  return {true, fmt("no cross-stage instance found on %zu circuits (diagnostic only)", corpus.size())};
}

// 6, 8 ----------------------------------------------------------------------
struct LearningSetup {
  EnvConfig env{};
  PpoConfig ppo{};
  Curriculum curriculum{};
  std::vector<BackendModel> pool;
};

LearningSetup learning_setup() {
  LearningSetup s;
  s.ppo.total_steps = 198656;  // 97 updates of 2048, under the 200k budget
  s.ppo.seed = 1;
  for (std::uint64_t k = 0; k < 4; ++k) {
    s.pool.push_back(synthetic_backend(Topology::HeavyHexFragment, 12, HeterogeneousNoise{k, 0.5, {}}));
  }
  return s;
}

std::uint64_t setup_hash(const LearningSetup& s) {
  Fnv1a h;
  h.add(s.env.observation_hash());
  h.add(static_cast<std::uint64_t>(s.ppo.total_steps));
  h.add(s.ppo.seed);
  h.add(s.ppo.rollout_steps);
  h.add(s.ppo.num_envs);
  h.add(s.ppo.batch_size);
  h.add(s.ppo.epochs_per_update);
  for (const auto& b : s.pool) h.add(b.fingerprint());
  h.add(std::string("v1"));
  return h.value();
}

struct Trained {
  PolicyParams params;
  PolicyShape shape;
  double train_seconds = 0.0;
  bool cached = false;
};

Trained trained_policy(const std::optional<std::string>& checkpoint, const fs::path& cache_dir) {
  const auto s = learning_setup();
  const auto shape = PolicyShape::for_env(s.env);
  if (checkpoint) {
    auto ck = checkpoint_load(*checkpoint, s.env.observation_hash());
    return {ck.params, ck.shape, 0.0, true};
  }
  fs::create_directories(cache_dir);
  std::ostringstream name;
  name << "policy_" << std::hex << setup_hash(s) << ".pfck";
  const auto path = cache_dir / name.str();
  const auto timing = fs::path(path.string() + ".json");
  if (fs::exists(path) && fs::exists(timing)) {
    auto ck = checkpoint_load(path.string(), s.env.observation_hash());
    std::ifstream in(timing);
    const double secs = nlohmann::json::parse(in).at("train_seconds").get<double>();
    return {ck.params, ck.shape, secs, true};
  }
  const auto t0 = Clock::now();
  TrainHooks hooks;
  hooks.on_update = [&](const TrainLogRow& r) {
    std::cerr << "  train update " << r.update << "/" << s.ppo.num_updates() << " esp_ratio " << r.mean_esp_ratio
              << " (" << static_cast<int>(seconds_since(t0)) << " s)\n";
  };
  auto result = train(s.ppo, s.env, s.pool, s.curriculum, shape, hooks);
  const double secs = seconds_since(t0);
  checkpoint_save(result.params, shape, s.env.observation_hash(), path.string());
  std::ofstream(timing) << nlohmann::json{{"train_seconds", secs}, {"env_steps", s.ppo.num_updates() * s.ppo.rollout_steps}};
  return {std::move(result.params), shape, secs, false};
}

std::vector<QuantumCircuit> held_out() {
  std::vector<QuantumCircuit> out;
  for (int i = 0; i < 100; ++i) {
    const int n = 4 + i % 5;
    out.push_back(random_circuit(n, 3 * n, 900000 + static_cast<std::uint64_t>(i)));
  }
  return out;
}

struct HeldOutEval {
  std::vector<double> policy, random, time_opt, brute;
  double inference_seconds = 0.0;
  double policy_compile_seconds = 0.0;
  double seconds = 0.0;
};

HeldOutEval evaluate_held_out(const Trained& t) {
  const auto b = learning_setup().pool.front();
  const auto corpus = held_out();
  HeldOutEval e;
  const auto t0 = Clock::now();
  const EnvConfig env{};
  // Sequential so that compile timings are not inflated by contention.
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto inf = infer_pipeline(t.params, t.shape, corpus[i], b, env);
    e.policy.push_back(inf.result.report.esp);
    e.inference_seconds += inf.inference_seconds;
    e.policy_compile_seconds += inf.result.compile_seconds;
  }
  e.random.resize(corpus.size());
  e.time_opt.resize(corpus.size());
  e.brute.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    e.random[i] = random_select(corpus[i], b, derive_seed(0xD1CE, i), no_reference()).report.esp;
    e.time_opt[i] = fixed_pipeline(FixedPipeline::TimeOptimized, corpus[i], b).report.esp;
    e.brute[i] = brute_force_selective(corpus[i], b, default_toggles()).best().report.esp;
  });
  e.seconds = seconds_since(t0);
  return e;
}

Verdict learning_signal(const Trained& t, const HeldOutEval& e) {
  const double p = mean(e.policy), r = mean(e.random), se = std_error(e.random), to = mean(e.time_opt),
               bf = mean(e.brute);
  const bool in_budget = t.train_seconds + e.seconds <= 7200;
  const bool ok = p >= r + 2 * se && p >= to && p >= 0.9 * bf && in_budget;
  return {ok, fmt("policy mean ESP %.4f vs random %.4f + 2SE = %.4f, time_optimized %.4f, 0.9 x brute-force %.4f; "
                  "%s, %.0f s training + %.0f s evaluation (budget 7200 s)",
                  p, r, r + 2 * se, to, 0.9 * bf, t.cached ? "cached policy, training time recorded when it was trained" : "trained now", t.train_seconds,
                  e.seconds)};
}

Verdict inference_overhead(const HeldOutEval& e) {
  const double share = e.inference_seconds / e.policy_compile_seconds;
  return {share < 0.05, fmt("inference %.1f ms of %.1f ms total compile time = %.2f%% (need < 5%%)",
                            e.inference_seconds * 1e3, e.policy_compile_seconds * 1e3, 100 * share)};
}

// 7 -------------------------------------------------------------------------
Verdict numerical_kernels() {
  std::vector<std::string> failures;
  // (a) finite differences on a small network.
  {
    PolicyShape s;
    s.pre_in = 10;
    s.post_in = 9;
    s.aux_in = kNumStages + kGlobalFeatures + 28;
    s.encoder = {6, 4};
    s.trunk = {5};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<Observation> obs(8);
    PpoBatch batch;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const int stage = static_cast<int>(i % kNumStages);
      obs[i].stage_onehot[static_cast<std::size_t>(stage)] = 1.0f;
      obs[i].circuit_tensor.resize(static_cast<std::size_t>(stage >= 3 ? s.post_in : s.pre_in));
      for (auto& v : obs[i].circuit_tensor) v = u(rng) > 0 ? 1.0f + u(rng) : 0.0f;
      for (auto& v : obs[i].global) v = u(rng);
      obs[i].history.resize(28);
      for (auto& v : obs[i].history) v = u(rng);
      ActionMask m;
      for (int a = 0; a < kNumActions; ++a) m.set(static_cast<std::size_t>(a), rng() % 2);
      m.set(static_cast<std::size_t>(i));
      batch.observations.push_back(&obs[i]);
      batch.masks.push_back(m);
      batch.actions.push_back(static_cast<int>(i));
      batch.advantages.push_back(u(rng));
      batch.returns.push_back(u(rng));
    }
    auto params = init_params<double>(s, 3);
    params.policy_head.w *= 30.0;
    const auto c0 = policy_forward<double>(params, s, batch.observations, batch.masks, PolicyMode::Eval);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      batch.old_log_probs.push_back(c0.log_probs(batch.actions[i], static_cast<Eigen::Index>(i)) - 0.05 * (i % 3));
    }
    PpoConfig cfg;
    double worst = 0.0;
    for (auto mode : {PolicyMode::Eval, PolicyMode::Train}) {
      PolicyParamsT<double> g;
      ppo_loss<double>(params, s, batch, cfg, mode, 9, &g);
      auto pl = params.layers();
      auto gl = std::as_const(g).layers();
      for (std::size_t l = 0; l < pl.size(); ++l) {
        auto check = [&](double& x, double analytic) {
          const double keep = x, h = 1e-6;
          x = keep + h;
          const double up = ppo_loss<double>(params, s, batch, cfg, mode, 9, nullptr).total;
          x = keep - h;
          const double dn = ppo_loss<double>(params, s, batch, cfg, mode, 9, nullptr).total;
          x = keep;
          const double fd = (up - dn) / (2 * h);
          worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-3}));
        };
        for (Eigen::Index k = 0; k < pl[l]->w.size(); ++k) check(pl[l]->w.data()[k], gl[l]->w.data()[k]);
        for (Eigen::Index k = 0; k < pl[l]->b.size(); ++k) check(pl[l]->b.data()[k], gl[l]->b.data()[k]);
      }
    }
    if (!(worst < 1e-4)) failures.push_back(fmt("gradient rel err %.2e", worst));
  }
  // (b) GAE against the explicit discounted sum.
  {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::vector<double> r(25), v(25);
    std::vector<bool> d(25);
    for (std::size_t k = 0; k < 25; ++k) {
      r[k] = g(rng);
      v[k] = g(rng);
      d[k] = rng() % 6 == 0;
    }
    double worst = 0.0;
    for (double gamma : {0.0, 0.5, 0.9, 0.99, 1.0}) {
      for (double lambda : {0.0, 0.5, 0.95, 1.0}) {
        const auto res = compute_gae(r, v, d, gamma, lambda, 0.7);
        for (std::size_t t = 0; t < 25; ++t) {
          double a = 0.0, w = 1.0;
          for (std::size_t k = t; k < 25; ++k) {
            const double next = k + 1 < 25 ? v[k + 1] : 0.7;
            a += w * (r[k] + (d[k] ? 0.0 : gamma * next) - v[k]);
            if (d[k]) break;
            w *= gamma * lambda;
          }
          worst = std::max(worst, std::abs(a - res.advantages[t]));
        }
      }
    }
    if (!(worst <= 1e-10)) failures.push_back(fmt("GAE abs err %.2e", worst));
  }
  // (c) masked softmax on a full-size policy.
  {
    const EnvConfig e{};
    const auto shape = PolicyShape::for_env(e);
    auto params = init_params<float>(shape, 4);
    params.policy_head.w *= 200.0f;
    CompilationEnv env(no_reference());
    std::mt19937_64 rng(10);
    double worst_sum = 0.0;
    bool masked_zero = true;
    for (int ep = 0; ep < 5; ++ep) {
      auto obs = env.reset(random_circuit(5, 12, static_cast<std::uint64_t>(ep)), heavyhex_file());
      while (!env.done()) {
        const auto m = env.action_mask();
        const auto out = evaluate_policy(params, shape, obs, m);
        double sum = 0.0;
        std::vector<int> valid;
        for (int a = 0; a < kNumActions; ++a) {
          sum += out.probs[static_cast<std::size_t>(a)];
          if (m.test(static_cast<std::size_t>(a))) valid.push_back(a);
          else masked_zero = masked_zero && out.probs[static_cast<std::size_t>(a)] == 0.0;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        obs = env.step(valid[rng() % valid.size()]).observation;
      }
    }
    if (!masked_zero) failures.push_back("masked action with nonzero probability");
    if (!(worst_sum <= 1e-9)) failures.push_back(fmt("softmax sum error %.2e", worst_sum));
  }
  // (d) soft normalization stays strictly inside (-1, 1).
  {
    bool inside = true;
    for (double x = -1e6; x <= 1e6; x += 997.3) inside = inside && std::abs(soft_normalize(x)) < 1.0;
    for (double x : {-1e6, -1.0, 0.0, 1e-300, 1.0, 1e6}) inside = inside && std::abs(soft_normalize(x)) < 1.0;
    if (!inside) failures.push_back("soft normalization left (-1, 1)");
  }
  std::string detail = "gradients, GAE grid, masked softmax, soft normalization";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// 9 -------------------------------------------------------------------------
Verdict noise_monotonicity() {
  const auto b = heavyhex_file();
  std::vector<QuantumCircuit> corpus;
  std::vector<CompileResult> compiled;
  for (int i = 0; i < 20; ++i) {
    const int n = 3 + i % 4;
    corpus.push_back(random_circuit(n, 3 * n, derive_seed(0x9015E, static_cast<std::uint64_t>(i))));
    compiled.push_back(fixed_pipeline(FixedPipeline::FidelityOptimized, corpus.back(), b));
  }
  const double scales[] = {1.0, 0.5, 0.3};
  const int seeds = 10;
  std::vector<double> tv(3 * corpus.size() * seeds);
  parallel_for(tv.size(), [&](std::size_t k) {
    const std::size_t s = k / (corpus.size() * seeds);
    const std::size_t i = (k / seeds) % corpus.size();
    const std::size_t seed = k % seeds;
    NoiseConfig nc;
    nc.noise_scale = scales[s];
    nc.shots = 2048;
    nc.seed = derive_seed(0x5EED9, i * 100 + seed);
    tv[k] = tvd(ideal_distribution(corpus[i]), noisy_distribution(compiled[i].circuit, b, compiled[i].layout, nc));
  });
  double m[3];
  for (int s = 0; s < 3; ++s) {
    const auto first = tv.begin() + static_cast<long>(s * corpus.size() * seeds);
    m[s] = std::accumulate(first, first + static_cast<long>(corpus.size() * seeds), 0.0) /
           static_cast<double>(corpus.size() * seeds);
  }
  return {m[0] >= m[1] && m[1] >= m[2],
          fmt("mean TVD %.4f (1.0) >= %.4f (0.5) >= %.4f (0.3) over %zu circuits x %d seeds", m[0], m[1], m[2],
              corpus.size(), seeds)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance harness"};
  std::vector<int> only;
  std::optional<std::string> checkpoint;
  std::string cache_dir = "acceptance_cache";
  app.add_option("--only", only, "Criteria to run (default: all)");
  app.add_option("--checkpoint", checkpoint, "Trained policy to use instead of training");
  app.add_option("--cache-dir", cache_dir, "Where the trained policy is cached");
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  int failed = 0;
  // Wall-clock budget per criterion; 0 means unbounded.
  auto report = [&](int k, const char* name, double budget, const std::function<Verdict()>& fn) {
    if (!wanted(k)) return;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    if (budget > 0 && elapsed > budget) {
      v.pass = false;
      v.detail += fmt("; over the %.0f s budget", budget);
    }
    failed += v.pass ? 0 : 1;
    std::cout << "criterion " << k << " [" << name << "]: " << (v.pass ? "PASS" : "FAIL") << " (" << v.detail << "; "
              << fmt("%.1f s", elapsed) << ")" << std::endl;
  };

  report(1, "validity", 300, validity);
  report(2, "semantic preservation", 600, semantic_preservation);
  report(3, "ESP/TVD correlation", 1200, esp_tvd_correlation);
  report(4, "selective compilation", 600, brute_force_reproduction);
  report(5, "greedy cross-stage diagnostic", 0, greedy_diagnostic);
  if (wanted(6) || wanted(8)) {
    std::optional<Trained> trained;
    std::optional<HeldOutEval> eval;
    std::string error;
    try {
      trained = trained_policy(checkpoint, cache_dir);
      eval = evaluate_held_out(*trained);
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto guard = [&](auto fn) {
      return [&, fn]() -> Verdict {
        if (!eval) return {false, "training or evaluation failed: " + error};
        return fn();
      };
    };
    report(6, "learning signal", 0, guard([&] { return learning_signal(*trained, *eval); }));
    report(7, "numerical kernels", 60, numerical_kernels);
    report(8, "inference overhead", 0, guard([&] { return inference_overhead(*eval); }));
  } else {
    report(7, "numerical kernels", 60, numerical_kernels);
  }
  report(9, "noise monotonicity", 0, noise_monotonicity);
  return failed == 0 ? 0 : 1;
}
