#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "passforge/backend.hpp"
#include "passforge/circuit.hpp"
#include "passforge/layout.hpp"

namespace passforge {

struct QualityReport {
  double esp = 1.0;
  GateCounts gate_counts;
  int depth = 0;
  double duration_estimate = 0.0;  // seconds along the layered schedule
};

nlohmann::json to_json(const QualityReport& r);

/// Estimated success probability of a translated, coupling-satisfying
/// physical circuit:
///   prod_g (1 - eps_g) * exp(-d t_g / mean T1 - d t_g / mean T2)
/// with eps from per-qubit 1q error, per-edge 2q error and per-qubit readout
/// error, d the circuit depth, t_g the mean duration over instructions and the
/// coherence means taken over active qubits.
double esp(const QuantumCircuit& c, const BackendModel& b, const Layout& layout);

/// ESP estimate for a placed but unrouted circuit. A 2q gate whose operands
/// sit d_path hops apart costs (1 - eps_eff) with
///   eps_eff = (d_path - 1) * 3 * mean_eps + mean_eps,
/// mean_eps averaged along the shortest path, and adds 3 (d_path - 1) serial
/// layers to the predicted depth. Accepts a logical circuit (mapped through
/// layout.initial) or an already placed physical one.
double layout_quality(const QuantumCircuit& c, const BackendModel& b, const Layout& layout);

/// ESP estimate for a routed, possibly untranslated circuit: each 2q gate on
/// edge e costs (1 - eps_e)^k with k the number of CZ it translates to.
double routing_quality(const QuantumCircuit& c, const BackendModel& b, const Layout& layout);

/// Number of CZ gates a two-qubit kind expands into (CX, CZ -> 1; SWAP -> 3).
int two_qubit_decomposition_cost(GateKind kind);

/// Total duration of the ASAP schedule (sum of per-layer maxima).
double duration_estimate(const QuantumCircuit& c, const BackendModel& b);

QualityReport quality_report(const QuantumCircuit& c, const BackendModel& b, const Layout& layout);

/// Gate+depth composite used before any layout exists: (gates + depth)
/// relative to a reference value, negated so larger is better.
double structural_score(const QuantumCircuit& c, double reference);

/// Measurement distribution over fixed-width bitstrings. Key bit c holds
/// classical bit c; strings print classical bit 0 rightmost.
struct Distribution {
  int num_bits = 0;
  std::map<std::uint64_t, double> probs;

  double total() const;
  double at(std::uint64_t key) const;
  std::string bitstring(std::uint64_t key) const;
  nlohmann::json to_json() const;
};

double tvd(const Distribution& p, const Distribution& q);

struct RewardWeights {
  double esp_weight = 1.0;  // W
  double gates_weight = 0.3;  // w1
  double depth_weight = 0.3;  // w2
  double clip = 2.0;          // symmetric bound on the log ratio
};

/// x / sqrt(1 + x^2)
double soft_normalize(double x);

/// W * clip(log(esp_rl / esp_ref), -c, c) + soft_normalize(w1 r_gates + w2 r_depth)
/// with r_gates = (gates_ref - gates_rl) / max(gates_ref, 1), r_depth alike.
double final_reward(double esp_rl, double esp_ref, double gates_rl, double gates_ref, double depth_rl,
                    double depth_ref, const RewardWeights& weights);

}  // namespace passforge
