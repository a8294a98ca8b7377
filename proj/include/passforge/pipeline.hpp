#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "passforge/backend.hpp"
#include "passforge/circuit.hpp"
#include "passforge/layout.hpp"
#include "passforge/metrics.hpp"
#include "passforge/passes.hpp"

namespace passforge {

struct CompileResult {
  QuantumCircuit circuit;
  Layout layout;
  QualityReport report;
  double compile_seconds = 0.0;
  /// Action ids in application order (kSkipAction marks stage advances).
  std::vector<int> trace;
  /// Stage quality proxy at the end of each stage, where defined.
  std::array<std::optional<double>, kNumStages> stage_proxy{};
};

/// Quality proxy of a stage: gate+depth composite (Init), layout quality
/// (Layout), routing quality (Routing), ESP (Optimize, Cleanup). Translate
/// has no proxy.
std::optional<double> stage_proxy(Stage s, const QuantumCircuit& c, const std::optional<Layout>& layout,
                                  const BackendModel& b, double structural_reference);

/// All gates coupled and in basis.
bool is_executable(const QuantumCircuit& c, const BackendModel& b);

enum class FixedPipeline { FidelityOptimized, TimeOptimized };

CompileResult fixed_pipeline(FixedPipeline kind, const QuantumCircuit& c, const BackendModel& b,
                             const PassOptions& options = {});

/// The FidelityOptimized sequence with every step whose PassKind is listed
/// in `disabled` left out.
CompileResult fidelity_skeleton(const QuantumCircuit& c, const BackendModel& b, std::span<const PassKind> disabled,
                                const PassOptions& options = {});

/// Optional kinds of the FidelityOptimized sequence; only these may be toggled.
bool is_toggleable(PassKind kind);

/// VF2L, VF2P, RIE, CC, CIW.
std::vector<PassId> default_toggles();

inline constexpr std::size_t kMaxToggles = 8;

struct BruteForceRow {
  std::uint32_t mask = 0;  // bit i set: toggles[i] enabled
  QualityReport report;
  double compile_seconds = 0.0;
};

struct BruteForceResult {
  std::vector<PassId> toggles;
  std::vector<BruteForceRow> rows;  // indexed by mask
  std::uint32_t best_mask = 0;
  /// Stage proxies of the best configuration.
  std::array<std::optional<double>, kNumStages> best_stage_proxy{};

  const BruteForceRow& best() const { return rows[best_mask]; }
  std::uint32_t all_on() const { return (std::uint32_t{1} << toggles.size()) - 1; }
};

/// Enumerates all 2^|toggles| configurations over the FidelityOptimized
/// skeleton. Best is the highest ESP; exact ties go to the larger mask.
BruteForceResult brute_force_selective(const QuantumCircuit& c, const BackendModel& b,
                                       std::span<const PassId> toggles, const PassOptions& options = {});

/// CSV with columns config,esp,gates,depth,compile_ms after '#' metadata lines.
void write_brute_force_csv(std::ostream& os, const BruteForceResult& r);

}  // namespace passforge
