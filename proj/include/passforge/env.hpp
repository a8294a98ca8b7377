#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "passforge/backend.hpp"
#include "passforge/circuit.hpp"
#include "passforge/metrics.hpp"
#include "passforge/passes.hpp"
#include "passforge/pipeline.hpp"

namespace passforge {

struct EnvConfig {
  int q_max = 16;    // logical qubit cap
  int g_types = 8;   // gate-type channels
  int t_bins = 4;    // temporal bins
  int p_max = 20;    // physical qubit slots of the post-routing tensor
  int e_max = 32;    // edge slots of the post-routing tensor
  int history_len = 5;
  int max_episode_steps = 64;
  double pass_timeout = 2.0;  // seconds
  RewardWeights reward_weights{};
  double shaping_weight = 0.5;
  double noop_penalty = 0.01;    // times the number of consecutive prior no-ops
  double failure_penalty = 0.05;
  /// Compile the FidelityOptimized reference for the terminal reward.
  bool use_reference = true;
  PassOptions pass_options{};

  int pre_tensor_size() const { return q_max * q_max * g_types * t_bins + q_max * g_types * t_bins; }
  int post_tensor_size() const { return e_max * g_types * t_bins * 4 + p_max * g_types * t_bins * 5; }
  int history_size() const { return history_len + kNumPasses + 1; }

  /// Fingerprint of every field that shapes observations.
  std::uint64_t observation_hash() const;

  /// Throws ValidationError on non-positive sizes or history_len != 5.
  void validate() const;
};

inline constexpr int kGlobalFeatures = 32;

struct Observation {
  std::array<float, kNumStages> stage_onehot{};
  /// Pre-layout tensor while stage <= Routing, else post-routing tensor.
  std::vector<float> circuit_tensor;
  std::array<float, kGlobalFeatures> global{};
  std::vector<float> history;

  Stage stage() const;
  bool post_routing() const { return stage() >= Stage::Translate; }
};

using ActionMask = std::bitset<kNumActions>;

struct StepInfo {
  Stage stage = Stage::Init;  // stage the action was taken in
  int action = kSkipAction;
  bool changed = false;
  bool failed = false;
  std::optional<std::string> failure_reason;
  double shaped = 0.0;        // weighted shaping term
  double penalty = 0.0;       // no-op and failure penalties (<= 0)
  double final_reward = 0.0;  // terminal comparison against the reference
  std::optional<double> proxy;
  std::size_t gates = 0;
  int depth = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Pass-selection MDP over one (circuit, backend) pair per episode.
/// Copyable, so search baselines can branch from any state.
class CompilationEnv {
 public:
  explicit CompilationEnv(EnvConfig cfg = {});

  const EnvConfig& config() const { return cfg_; }

  /// Starts an episode; throws ValidationError for physical or over-wide circuits.
  Observation reset(const QuantumCircuit& circuit, const BackendModel& backend);

  ActionMask action_mask() const;
  /// Throws ContractError when `action` is not in the mask.
  StepResult step(int action);

  Observation observation() const;

  Stage stage() const { return stage_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  const QuantumCircuit& circuit() const { return circuit_; }
  const std::optional<Layout>& layout() const { return layout_; }
  const BackendModel& backend() const { return *backend_; }
  /// Current stage proxy, the shaping potential.
  std::optional<double> proxy() const { return potential_; }
  std::optional<double> stage_proxy_at_end(Stage s) const { return stage_end_proxy_[static_cast<std::size_t>(s)]; }
  const std::vector<int>& actions() const { return actions_; }
  const std::vector<StepInfo>& trace() const { return trace_; }
  const std::optional<QualityReport>& reference() const { return reference_; }

  /// Quality report of the finished circuit; throws ContractError before done.
  QualityReport final_report() const;

  /// One JSON object per step.
  void write_trace_jsonl(std::ostream& os) const;

 private:
  bool prerequisites_met(const PassInfo& p) const;
  bool forced_mode() const;
  std::optional<int> forced_action() const;
  bool hard_constraints_hold() const;
  bool has_uncoupled_2q() const;
  double apply_pass(PassId id, StepInfo& info);
  double advance_stage(StepInfo& info);
  void set_potential();
  const QualityReport& reference_for(const QuantumCircuit& logical);

  EnvConfig cfg_;
  std::shared_ptr<const BackendModel> backend_;
  std::uint64_t backend_fingerprint_ = 0;

  QuantumCircuit original_;
  QuantumCircuit logical_;  // circuit at layout-stage entry
  QuantumCircuit circuit_;
  std::optional<Layout> layout_;
  Stage stage_ = Stage::Init;
  bool done_ = true;
  int steps_ = 0;
  int stage_steps_ = 0;
  double structural_reference_ = 1.0;
  std::size_t initial_gates_ = 0;
  int initial_depth_ = 0;

  std::optional<double> potential_;
  std::array<std::optional<double>, kNumStages> stage_end_proxy_{};
  std::bitset<kNumPasses> succeeded_;
  std::bitset<kNumPasses> failed_;
  std::bitset<kNumPasses> pending_follow_ups_;
  std::vector<PassId> optimize_selection_;
  std::array<int, kNumPasses> noop_counts_{};
  int last_action_ = -1;
  int consecutive_noops_ = 0;
  std::deque<int> history_;
  std::vector<int> actions_;
  std::vector<StepInfo> trace_;

  std::optional<QualityReport> reference_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, QualityReport> reference_cache_;
};

/// Pass that a forced-mode mask may never lose to failure.
bool is_fallback_pass(PassId id);

}  // namespace passforge
