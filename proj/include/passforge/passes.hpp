#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "passforge/backend.hpp"
#include "passforge/circuit.hpp"
#include "passforge/error.hpp"
#include "passforge/layout.hpp"

namespace passforge {

enum class Stage : std::uint8_t { Init = 0, Layout = 1, Routing = 2, Translate = 3, Optimize = 4, Cleanup = 5 };

inline constexpr int kNumStages = 6;

std::string_view stage_name(Stage s);

/// Underlying transformation; several stage-scoped catalog entries share one.
enum class PassKind : std::uint8_t {
  Unroll3q,
  RemoveIdentityEquivalent,
  CommutativeCancellation,
  InverseCancellation,
  ContractIdleWires,
  TrivialLayout,
  DenseLayout,
  Vf2Layout,
  NoiseAwareLayout,
  BasicSwap,
  SabreSwap,
  LookaheadSwap,
  Vf2PostLayout,
  BasisTranslation,
  Optimize1qChains,
};

std::string_view pass_kind_name(PassKind k);

enum class PassId : std::uint8_t {
  InitUnroll3q,
  InitRemoveIdentity,
  InitCommutativeCancellation,
  InitInverseCancellation,
  InitContractIdleWires,
  LayoutTrivial,
  LayoutDense,
  LayoutVf2,
  LayoutNoiseAware,
  RouteBasicSwap,
  RouteSabre,
  RouteLookahead,
  RouteVf2PostLayout,
  TranslateBasis,
  OptRemoveIdentity,
  OptCommutativeCancellation,
  OptOptimize1q,
  OptContractIdleWires,
  CleanupOptimize1q,
  CleanupCommutativeCancellation,
  CleanupRemoveIdentity,
  CleanupVf2PostLayout,
};

inline constexpr int kNumPasses = 22;
/// Action index of SKIP (advance to the next stage).
inline constexpr int kSkipAction = kNumPasses;
inline constexpr int kNumActions = kNumPasses + 1;

struct PassInfo {
  PassId id;
  std::string_view name;
  Stage stage;
  PassKind kind;
  bool mandatory = false;
  /// Satisfied when any listed pass has already succeeded in the episode.
  std::vector<PassId> prerequisites;
  /// Must run after this pass before its stage may be skipped.
  std::vector<PassId> follow_ups;
};

const std::vector<PassInfo>& pass_catalog();
const PassInfo& pass_info(PassId id);
std::optional<PassId> pass_from_name(std::string_view name);
/// Catalog as JSON: [{id, name, stage, kind, mandatory, prerequisites, follow_ups}].
nlohmann::json catalog_json();

struct PassOutcome {
  QuantumCircuit circuit;
  bool changed = false;
  std::optional<Layout> layout;
  bool failed = false;
  std::optional<std::string> failure_reason;
  double elapsed = 0.0;  // seconds
  int iterations = 1;
};

class PassTimeout : public Error {
 public:
  PassTimeout() : Error("Timeout") {}
};

/// Wall-clock budget checked at instruction granularity.
class Deadline {
 public:
  static Deadline never() { return Deadline(); }
  static Deadline after(double seconds);

  bool expired() const;
  /// Throws PassTimeout once expired.
  void check() const {
    if (expired()) throw PassTimeout();
  }

 private:
  std::optional<std::chrono::steady_clock::time_point> end_;
};

struct PassOptions {
  int vf2_call_limit = 10000;
  int lookahead_beam = 4;
  int lookahead_depth = 3;
  std::uint64_t seed = 11;
  double timeout_seconds = 2.0;  // <= 0 disables
};

PassOutcome apply_unroll_3q(const QuantumCircuit& c);
PassOutcome apply_remove_identity_equivalent(const QuantumCircuit& c);
PassOutcome apply_commutative_cancellation(const QuantumCircuit& c, const Deadline& deadline = Deadline::never());
PassOutcome apply_inverse_cancellation(const QuantumCircuit& c);
/// Logical circuit: drops untouched wires. Physical circuit: marks the
/// layout so untouched image qubits leave decoherence averaging.
PassOutcome apply_contract_idle_wires(const QuantumCircuit& c, const std::optional<Layout>& layout = std::nullopt);

PassOutcome apply_trivial_layout(const QuantumCircuit& c, const BackendModel& b);
PassOutcome apply_dense_layout(const QuantumCircuit& c, const BackendModel& b);
PassOutcome apply_vf2_layout(const QuantumCircuit& c, const BackendModel& b, int call_limit = 10000,
                             const Deadline& deadline = Deadline::never());
PassOutcome apply_noise_aware_layout(const QuantumCircuit& c, const BackendModel& b);

PassOutcome apply_basic_swap(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                             const Deadline& deadline = Deadline::never());
PassOutcome apply_sabre_swap_lite(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                  std::uint64_t seed, const Deadline& deadline = Deadline::never());
PassOutcome apply_lookahead_swap_lite(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                      int beam = 4, int beam_depth = 3, const Deadline& deadline = Deadline::never());
PassOutcome apply_vf2_post_layout(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                  int call_limit = 10000, const Deadline& deadline = Deadline::never());

PassOutcome apply_basis_translation(const QuantumCircuit& c);
PassOutcome apply_optimize_1q_chains(const QuantumCircuit& c, const Deadline& deadline = Deadline::never());

/// Runs any single catalog entry; exceptions and timeouts become failed outcomes.
PassOutcome run_pass(PassId id, const QuantumCircuit& c, const BackendModel& b, const std::optional<Layout>& layout,
                     const PassOptions& options = {});

/// Round-robin over `selected` until an iteration leaves (gate count, depth)
/// unchanged, at most 10 iterations.
PassOutcome run_optimize_loop(const QuantumCircuit& c, std::span<const PassId> selected, const BackendModel& b,
                              const std::optional<Layout>& layout, const PassOptions& options = {});

inline constexpr int kMaxOptimizeIterations = 10;

/// Number of SWAP instructions in a circuit.
std::size_t count_swaps(const QuantumCircuit& c);

/// Subgraph monomorphism search of `pattern` (k nodes) into the coupling graph.
/// `on_match` receives pattern->target maps and returns false to stop.
/// Returns the number of node expansions used.
struct MonomorphismResult {
  std::size_t expansions = 0;
  bool exhausted = false;  // search space fully explored
  std::size_t matches = 0;
};

template <typename F>
MonomorphismResult find_monomorphisms(int k, const std::vector<Edge>& pattern_edges, const BackendModel& b,
                                      std::size_t call_limit, const Deadline& deadline, F&& on_match);

}  // namespace passforge

#include "passforge/detail/monomorphism.hpp"
