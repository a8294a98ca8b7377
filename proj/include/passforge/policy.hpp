#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "passforge/env.hpp"

namespace passforge {

struct PolicyShape {
  int pre_in = 0;
  int post_in = 0;
  int aux_in = 0;  // stage one-hot + global + history
  std::vector<int> encoder{256, 128, 64, 64};
  std::vector<int> trunk{128, 128};
  int actions = kNumActions;
  double dropout = 0.1;

  static PolicyShape for_env(const EnvConfig& cfg);
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

template <typename S>
struct Linear {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> w;  // out x in
  Eigen::Matrix<S, Eigen::Dynamic, 1> b;
};

template <typename S>
struct PolicyParamsT {
  std::vector<Linear<S>> encoder_pre;
  std::vector<Linear<S>> encoder_post;
  std::vector<Linear<S>> trunk;
  Linear<S> policy_head;
  Linear<S> value_head;

  /// Every layer in a fixed order: pre, post, trunk, policy, value.
  std::vector<Linear<S>*> layers();
  std::vector<const Linear<S>*> layers() const;
  std::size_t parameter_count() const;
  /// Same shapes, all zeros.
  PolicyParamsT zeros_like() const;
  template <typename T>
  PolicyParamsT<T> cast() const;
};

using PolicyParams = PolicyParamsT<float>;

/// He-uniform weights, zero biases; deterministic per seed.
template <typename S>
PolicyParamsT<S> init_params(const PolicyShape& shape, std::uint64_t seed);

enum class PolicyMode { Train, Eval };

template <typename S>
struct ForwardCache {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  std::size_t n = 0;
  std::array<std::vector<Eigen::Index>, 2> columns;  // sample indices per encoder (pre, post)
  std::array<Eigen::SparseMatrix<S>, 2> inputs;
  std::array<std::vector<Mat>, 2> enc_z;     // pre-activations
  std::array<std::vector<Mat>, 2> enc_a;     // activations after dropout
  std::array<std::vector<Mat>, 2> enc_drop;  // inverted-dropout multipliers
  Mat trunk_in;
  std::vector<Mat> trunk_z;
  std::vector<Mat> trunk_a;
  Eigen::MatrixXd logits;     // actions x n, masked entries at -1e9
  Eigen::MatrixXd probs;      // masked softmax
  Eigen::MatrixXd log_probs;  // 0 at masked entries
  Eigen::VectorXd values;
  std::vector<ActionMask> masks;
};

/// Batched forward pass. The encoder of each sample is chosen by its stage.
/// Throws ValidationError when a tensor does not match the shape.
template <typename S>
ForwardCache<S> policy_forward(const PolicyParamsT<S>& params, const PolicyShape& shape,
                               std::span<const Observation* const> obs, std::span<const ActionMask> masks,
                               PolicyMode mode, std::uint64_t dropout_seed = 0);

/// Exact gradients given upstream dL/dlogits (actions x n) and dL/dvalues.
/// Masked logit entries receive zero gradient.
template <typename S>
PolicyParamsT<S> policy_backward(const PolicyParamsT<S>& params, const ForwardCache<S>& cache,
                                 const Eigen::MatrixXd& dlogits, const Eigen::VectorXd& dvalues);

struct PolicyOutput {
  std::vector<double> probs;
  double value = 0.0;
};

PolicyOutput evaluate_policy(const PolicyParams& params, const PolicyShape& shape, const Observation& obs,
                             const ActionMask& mask);

/// Same result as evaluate_policy, reusing the last encoder output of each
/// encoder while its circuit tensor is unchanged. Holds references to the
/// parameters and shape.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const PolicyParams& params, const PolicyShape& shape) : params_(&params), shape_(&shape) {}
  PolicyOutput operator()(const Observation& obs, const ActionMask& mask);

 private:
  struct Memo {
    bool valid = false;
    std::vector<float> input;
    Eigen::VectorXf embedding;
  };
  const PolicyParams* params_;
  const PolicyShape* shape_;
  std::array<Memo, 2> memo_;
};

/// Highest-probability valid action; ties to the lower id.
int greedy_action(const PolicyOutput& out, const ActionMask& mask);

/// Versioned binary checkpoint: magic, version, observation hash, shape
/// table, little-endian float32 payload.
void checkpoint_save(const PolicyParams& params, const PolicyShape& shape, std::uint64_t observation_hash,
                     const std::string& path);

struct Checkpoint {
  PolicyParams params;
  PolicyShape shape;
  std::uint64_t observation_hash = 0;
};

/// Throws ValidationError on bad magic, version or, when `expected_hash` is
/// non-zero, an observation hash mismatch.
Checkpoint checkpoint_load(const std::string& path, std::uint64_t expected_hash = 0);

}  // namespace passforge
