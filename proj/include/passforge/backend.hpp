#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "passforge/circuit.hpp"

namespace passforge {

using Edge = std::pair<int, int>;  // always stored with first < second

struct GateDurations {
  double oneq = 35e-9;
  double twoq = 300e-9;
  double measure = 1e-6;

  double of(GateKind kind) const;
};

/// Raw calibration record; BackendModel::create validates it.
struct Calibration {
  int num_qubits = 0;
  std::vector<Edge> edges;
  std::vector<double> eps_2q;  // aligned with edges
  std::vector<double> eps_1q;
  std::vector<double> eps_readout;
  std::vector<double> t1;  // seconds
  std::vector<double> t2;  // seconds
  GateDurations durations;
};

/// Coupling graph plus calibration, with all-pairs shortest paths cached.
/// Immutable once built.
class BackendModel {
 public:
  static BackendModel create(Calibration cal, std::string name = "backend");

  const std::string& name() const { return name_; }
  int num_physical() const { return cal_.num_qubits; }
  const std::vector<Edge>& edges() const { return cal_.edges; }
  std::size_t num_edges() const { return cal_.edges.size(); }
  const Calibration& calibration() const { return cal_; }
  const GateDurations& durations() const { return cal_.durations; }

  double eps_1q(int q) const { return cal_.eps_1q[q]; }
  double eps_readout(int q) const { return cal_.eps_readout[q]; }
  double t1(int q) const { return cal_.t1[q]; }
  double t2(int q) const { return cal_.t2[q]; }
  double eps_2q(int edge_index) const { return cal_.eps_2q[edge_index]; }

  bool adjacent(int a, int b) const { return edge_index(a, b) >= 0; }
  /// Index into edges(), or -1 when (a, b) is not coupled.
  int edge_index(int a, int b) const { return edge_of_[a * num_physical() + b]; }
  /// Two-qubit error of a coupled pair; throws when not coupled.
  double eps_2q(int a, int b) const;
  const std::vector<int>& neighbors(int q) const { return neighbors_[q]; }

  /// Shortest-path hop count; 0 on the diagonal.
  int distance(int a, int b) const { return dist_[a * num_physical() + b]; }
  /// Lexicographically smallest shortest path from a to b (inclusive).
  std::vector<int> shortest_path(int a, int b) const;
  /// Mean eps_2q over the edges of shortest_path(a, b); 0 when a == b.
  double mean_path_eps_2q(int a, int b) const { return path_eps_[a * num_physical() + b]; }

  /// Content fingerprint used for caching reference compilations.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  BackendModel() = default;

  std::string name_;
  Calibration cal_;
  std::vector<int> edge_of_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<int> dist_;
  std::vector<int> next_hop_;
  std::vector<double> path_eps_;
  std::uint64_t fingerprint_ = 0;
};

/// Hop count between two physical qubits.
int swap_distance(const BackendModel& b, int i, int j);

BackendModel load_calibration(const std::string& path);
BackendModel backend_from_json(const nlohmann::json& j, std::string name = "backend");
nlohmann::json backend_to_json(const BackendModel& b);

enum class Topology { Line, Ring, Grid, HeavyHexFragment };

Topology topology_from_string(const std::string& name);

struct UniformNoise {
  double eps_1q = 5e-4;
  double eps_2q = 1e-2;
  double eps_readout = 2e-2;
  double t1 = 100e-6;
  double t2 = 80e-6;
};

/// Lognormal per-qubit / per-edge spread around the UniformNoise defaults.
struct HeterogeneousNoise {
  std::uint64_t seed = 0;
  double spread = 0.5;
  UniformNoise base{};
};

using NoiseProfile = std::variant<UniformNoise, HeterogeneousNoise>;

/// Coupling edges of a synthetic topology; throws when n does not fit.
std::vector<Edge> topology_edges(Topology kind, int n);

BackendModel synthetic_backend(Topology kind, int n, const NoiseProfile& noise);

/// Training-time perturbation: multiplicative Gaussian jitter of error rates
/// (sigma 0.2) and coherence times (sigma 0.1), plus independent removal of
/// non-bridge edges with probability 0.05. Connectivity is preserved.
BackendModel perturb(const BackendModel& b, std::uint64_t seed);

/// Edges whose removal disconnects the graph.
std::vector<bool> bridge_edges(int num_nodes, const std::vector<Edge>& edges);

bool is_connected(int num_nodes, const std::vector<Edge>& edges);

inline constexpr double kMinErrorRate = 1e-6;
inline constexpr double kMaxErrorRate = 0.5;
inline constexpr double kMinCoherence = 1e-6;
inline constexpr double kMaxCoherence = 1.0;

}  // namespace passforge
