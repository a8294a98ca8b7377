#include "passforge/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <random>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

EnvConfig without_reference(EnvConfig cfg) {
  cfg.use_reference = false;
  return cfg;
}

std::vector<int> valid_actions(const ActionMask& mask) {
  std::vector<int> out;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) out.push_back(a);
  }
  return out;
}

}  // namespace

CompileResult collect_episode(const CompilationEnv& env, double compile_seconds) {
  if (!env.done() || !env.layout()) throw Error("episode did not finish");
  CompileResult r;
  r.circuit = env.circuit();
  r.layout = *env.layout();
  r.report = env.final_report();
  r.trace = env.actions();
  for (int s = 0; s < kNumStages; ++s) {
    r.stage_proxy[static_cast<std::size_t>(s)] = env.stage_proxy_at_end(static_cast<Stage>(s));
  }
  r.compile_seconds = compile_seconds;
  return r;
}

CompileResult random_select(const QuantumCircuit& c, const BackendModel& b, std::uint64_t seed, const EnvConfig& cfg) {
  const auto start = Clock::now();
  CompilationEnv env(without_reference(cfg));
  env.reset(c, b);
  std::mt19937_64 rng(seed);
  while (!env.done()) {
    const auto valid = valid_actions(env.action_mask());
    std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
    env.step(valid[pick(rng)]);
  }
  return collect_episode(env, seconds_since(start));
}

CompileResult greedy_select(const QuantumCircuit& c, const BackendModel& b, const EnvConfig& cfg) {
  const auto start = Clock::now();
  CompilationEnv env(without_reference(cfg));
  env.reset(c, b);
  while (!env.done()) {
    const auto valid = valid_actions(env.action_mask());
    const auto current = env.proxy();
    std::optional<int> best;
    std::optional<double> best_value;
    CompilationEnv best_env = env;
    // When nothing improves and SKIP is blocked, take the first pass that unblocks it.
    std::optional<CompilationEnv> unblock;
    for (int a : valid) {
      if (a == kSkipAction) continue;
      CompilationEnv trial = env;
      const StepResult r = trial.step(a);
      if (r.info.failed) continue;
      if (!unblock && (trial.done() || trial.action_mask().test(static_cast<std::size_t>(kSkipAction)))) unblock = trial;
      if (!r.info.changed) continue;
      const auto value = trial.proxy();
      const bool better = !best || (value && (!best_value || *value > *best_value));
      if (better) {
        best = a;
        best_value = value;
        best_env = std::move(trial);
      }
    }
    const bool skip_ok = std::find(valid.begin(), valid.end(), kSkipAction) != valid.end();
    const bool improves = best && best_value && (!current || *best_value > *current);
    if (best && (improves || !skip_ok)) {
      env = std::move(best_env);
    } else if (skip_ok) {
      env.step(kSkipAction);
    } else if (unblock) {
      env = std::move(*unblock);
    } else {
      env.step(valid.front());
    }
  }
  return collect_episode(env, seconds_since(start));
}

CompileResult replay_actions(const QuantumCircuit& c, const BackendModel& b, const std::vector<int>& actions,
                             const EnvConfig& cfg) {
  const auto start = Clock::now();
  CompilationEnv env(without_reference(cfg));
  env.reset(c, b);
  std::size_t i = 0;
  while (!env.done()) {
    const ActionMask mask = env.action_mask();
    // Skip recorded actions that do not apply here, but never skip past a stage advance.
    while (i < actions.size() && !mask[static_cast<std::size_t>(actions[i])] && actions[i] != kSkipAction) ++i;
    int a = kSkipAction;
    if (i < actions.size() && mask[static_cast<std::size_t>(actions[i])]) {
      a = actions[i++];
    } else {
      const auto valid = valid_actions(mask);
      a = mask[kSkipAction] ? kSkipAction : valid.front();
    }
    env.step(a);
  }
  return collect_episode(env, seconds_since(start));
}

std::vector<PassId> es_genes() {
  return {PassId::InitRemoveIdentity, PassId::InitCommutativeCancellation, PassId::LayoutVf2,
          PassId::LayoutNoiseAware,   PassId::RouteVf2PostLayout,          PassId::OptOptimize1q,
          PassId::OptContractIdleWires};
}

EvolutionResult evolution_strategy(const QuantumCircuit& c, const BackendModel& b, int budget, std::uint64_t seed,
                                   const PassOptions& options) {
  if (budget < 1) throw ValidationError("evolution budget must be positive");
  constexpr int kMu = 4;
  constexpr int kLambda = 12;
  constexpr double kFlip = 0.1;
  const auto start = Clock::now();
  const auto genes = es_genes();
  const auto n = static_cast<int>(genes.size());
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  std::mt19937_64 rng(derive_seed(seed, 0xe5));
  std::bernoulli_distribution flip(kFlip);

  EvolutionResult out;
  std::map<std::uint32_t, CompileResult> seen;
  auto fitness = [&](std::uint32_t genome) -> double {
    auto it = seen.find(genome);
    if (it == seen.end()) {
      std::vector<PassKind> disabled;
      for (int i = 0; i < n; ++i) {
        if (!((genome >> i) & 1U)) disabled.push_back(pass_info(genes[static_cast<std::size_t>(i)]).kind);
      }
      it = seen.emplace(genome, fidelity_skeleton(c, b, disabled, options)).first;
      ++out.evaluations;
    }
    return it->second.report.esp;
  };
  auto rank = [&](std::vector<std::uint32_t>& pop) {
    std::stable_sort(pop.begin(), pop.end(), [&](std::uint32_t x, std::uint32_t y) { return fitness(x) > fitness(y); });
  };

  std::vector<std::uint32_t> parents{full};
  std::uniform_int_distribution<std::uint32_t> any(0, full);
  while (static_cast<int>(parents.size()) < kMu) parents.push_back(any(rng));
  for (auto g : parents) {
    if (out.evaluations >= budget) break;
    fitness(g);
  }
  const auto distinct_limit = static_cast<int>(full) + 1;
  for (int generation = 0; generation < 1000 && out.evaluations < std::min(budget, distinct_limit); ++generation) {
    std::vector<std::uint32_t> offspring;
    std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
    for (int k = 0; k < kLambda && out.evaluations < budget; ++k) {
      std::uint32_t child = parents[pick(rng)];
      for (int i = 0; i < n; ++i) {
        if (flip(rng)) child ^= std::uint32_t{1} << i;
      }
      fitness(child);
      offspring.push_back(child);
    }
    rank(offspring);
    offspring.resize(std::min<std::size_t>(offspring.size(), kMu));
    if (!offspring.empty()) parents = std::move(offspring);
  }
  double best_esp = -1.0;
  for (const auto& [genome, result] : seen) {
    if (result.report.esp >= best_esp) {
      best_esp = result.report.esp;
      out.best_genome = genome;
    }
  }
  out.best = seen.at(out.best_genome);
  out.search_seconds = seconds_since(start);
  return out;
}

}  // namespace passforge
