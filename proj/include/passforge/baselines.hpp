#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "passforge/env.hpp"
#include "passforge/pipeline.hpp"

namespace passforge {

/// Packages a finished episode; throws Error when it is not done.
CompileResult collect_episode(const CompilationEnv& env, double compile_seconds);

/// One episode with actions drawn uniformly from each mask.
CompileResult random_select(const QuantumCircuit& c, const BackendModel& b, std::uint64_t seed,
                            const EnvConfig& cfg = {});

/// At each decision point tries every valid pass on a copy of the episode and
/// keeps the one with the highest stage proxy (ties to the lower action id).
/// SKIP is taken once no pass strictly improves the proxy.
CompileResult greedy_select(const QuantumCircuit& c, const BackendModel& b, const EnvConfig& cfg = {});

/// Replays an action trace through the environment; actions that are not in
/// the current mask are dropped and the episode is completed with forced
/// actions. Used to transfer a learned sequence to another circuit.
CompileResult replay_actions(const QuantumCircuit& c, const BackendModel& b, const std::vector<int>& actions,
                             const EnvConfig& cfg = {});

struct EvolutionResult {
  CompileResult best;
  std::uint32_t best_genome = 0;  // bit i: es_genes()[i] enabled
  int evaluations = 0;
  double search_seconds = 0.0;
  std::string method = "(mu,lambda) evolution strategy over pass toggles; stand-in for CMA-ES";
};

/// Optional pipeline steps searched by evolution_strategy.
std::vector<PassId> es_genes();

/// (mu=4, lambda=12) comma-selection over bit vectors with per-bit flip
/// probability 0.1 and ESP fitness, within `budget` distinct evaluations.
EvolutionResult evolution_strategy(const QuantumCircuit& c, const BackendModel& b, int budget, std::uint64_t seed,
                                   const PassOptions& options = {});

}  // namespace passforge
