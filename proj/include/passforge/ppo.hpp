#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "passforge/baselines.hpp"
#include "passforge/env.hpp"
#include "passforge/policy.hpp"

namespace passforge {

struct PpoConfig {
  double learning_rate = 3e-4;
  int rollout_steps = 2048;
  int batch_size = 64;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs_per_update = 10;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int num_envs = 8;
  long total_steps = 200000;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;  // updates; 0 disables
  bool dropout_in_updates = true;

  /// Throws ValidationError unless rollout_steps is a positive multiple of
  /// batch_size and of num_envs, and total_steps >= rollout_steps.
  void validate() const;
  long num_updates() const { return total_steps / rollout_steps; }
};

/// Per-episode circuit sampling for training.
struct Curriculum {
  int min_qubits = 4;
  int max_qubits = 8;
  double min_depth_factor = 2.0;  // depth drawn from [factor_min * n, factor_max * n]
  double max_depth_factor = 4.0;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t;
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; returns = A + V.
/// `last_value` bootstraps the step after the final one.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, const std::vector<bool>& dones,
                      double gamma, double lambda, double last_value = 0.0);

/// min(rho A, clip(rho, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double eps);

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct PpoBatch {
  std::vector<const Observation*> observations;
  std::vector<ActionMask> masks;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// -mean(min(rho A, clip(rho) A)) + value_coef mean((V - R)^2) - entropy_coef mean(H)
/// with rho = exp(log pi_new - log pi_old). Writes exact parameter gradients
/// into `grad` when given.
template <typename S>
LossBreakdown ppo_loss(const PolicyParamsT<S>& params, const PolicyShape& shape, const PpoBatch& batch,
                       const PpoConfig& cfg, PolicyMode mode, std::uint64_t dropout_seed, PolicyParamsT<S>* grad);

class Adam {
 public:
  explicit Adam(const PolicyParams& like, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  /// Global-norm clipping to `max_norm` (<= 0 disables), then one Adam step.
  /// Returns the pre-clip gradient norm.
  double step(PolicyParams& params, PolicyParams grads, double max_norm);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  PolicyParams m_, v_;
};

struct TrainLogRow {
  int update = 0;
  long env_steps = 0;
  int episodes = 0;
  double mean_episode_reward = 0.0;
  double mean_esp_ratio = 0.0;  // final ESP over reference ESP
  double mean_episode_length = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// CSV header and row for the training log.
std::string train_log_header();
std::string train_log_csv(const TrainLogRow& row);

struct TrainResult {
  PolicyParams params;
  PolicyShape shape;
  std::vector<TrainLogRow> log;
};

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_update;
  /// Called every checkpoint_every updates and after the last one.
  std::function<void(int update, const PolicyParams&)> on_checkpoint;
  /// Directory for diagnostic dumps on a non-finite loss.
  std::optional<std::string> dump_dir;
};

/// Masked PPO: rollouts over num_envs environments (backends rotated
/// round-robin, fresh random circuits per episode), GAE, clipped updates.
TrainResult train(const PpoConfig& cfg, const EnvConfig& env_cfg, const std::vector<BackendModel>& backend_pool,
                  const Curriculum& curriculum, const PolicyShape& shape, const TrainHooks& hooks = {});

struct InferenceResult {
  CompileResult result;
  double inference_seconds = 0.0;  // policy forward passes and argmax only
};

/// Greedy masked argmax episode with the frozen policy; no reference, no reward.
/// Transitions are deterministic, so an action already taken from the same
/// compilation state (stage, circuit, layout) is not repeated; the argmax
/// runs over the untried valid actions while any remain.
InferenceResult infer_pipeline(const PolicyParams& params, const PolicyShape& shape, const QuantumCircuit& c,
                               const BackendModel& b, const EnvConfig& env_cfg);

}  // namespace passforge
