#include "passforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "passforge/error.hpp"

namespace passforge {
namespace {

struct ExtraLoad {
  int depth = 0;
  std::size_t instances = 0;
  double duration = 0.0;
};

void require_physical(const QuantumCircuit& c, const BackendModel& b, const char* who) {
  if (c.qubit_space() != QubitSpace::Physical) throw ContractError(std::string(who) + ": circuit is not placed");
  if (c.num_qubits() > b.num_physical()) throw ContractError(std::string(who) + ": circuit wider than backend");
}

void require_layout(const QuantumCircuit& c, const BackendModel& b, const Layout& layout, const char* who) {
  if (layout.initial.empty()) {
    if (c.empty()) return;
    throw ContractError(std::string(who) + ": layout missing");
  }
  if (!layout.valid_for(b.num_physical())) throw ContractError(std::string(who) + ": layout invalid for backend");
}

// Shared tail of ESP/LQ/RQ: success product times the decoherence factor.
template <typename GateFactor>
double success_estimate(const QuantumCircuit& c, const BackendModel& b, const Layout& layout, GateFactor&& factor,
                        const ExtraLoad& extra) {
  double product = 1.0;
  double total_duration = extra.duration;
  for (const auto& inst : c.instructions()) {
    product *= factor(inst);
    total_duration += b.durations().of(inst.kind);
  }
  const std::size_t instances = c.size() + extra.instances;
  const int d = depth(c) + extra.depth;
  if (instances == 0 || d == 0) return std::clamp(product, 0.0, 1.0);
  const double t_g = total_duration / static_cast<double>(instances);

  std::vector<bool> active = touched_qubits(c);
  if (!layout.idle_wires_contracted) {
    for (int p : layout.initial) {
      if (p < static_cast<int>(active.size())) active[p] = true;
    }
  }
  double t1_sum = 0.0;
  double t2_sum = 0.0;
  int count = 0;
  for (int q = 0; q < static_cast<int>(active.size()); ++q) {
    if (!active[q]) continue;
    t1_sum += b.t1(q);
    t2_sum += b.t2(q);
    ++count;
  }
  if (count == 0) return std::clamp(product, 0.0, 1.0);
  const double t1_mean = t1_sum / count;
  const double t2_mean = t2_sum / count;
  const double decay = std::exp(-d * t_g / t1_mean - d * t_g / t2_mean);
  return std::clamp(product * decay, 0.0, 1.0);
}

double one_qubit_factor(const Instruction& inst, const BackendModel& b) {
  if (inst.kind == GateKind::MEASURE) return 1.0 - b.eps_readout(inst.qubits[0]);
  return 1.0 - b.eps_1q(inst.qubits[0]);
}

}  // namespace

nlohmann::json to_json(const QualityReport& r) {
  return {
      {"esp", r.esp},
      {"gates_1q", r.gate_counts.one_qubit},
      {"gates_2q", r.gate_counts.two_qubit},
      {"gates_3q", r.gate_counts.three_qubit},
      {"measurements", r.gate_counts.measurements},
      {"depth", r.depth},
      {"duration_estimate_s", r.duration_estimate},
  };
}

int two_qubit_decomposition_cost(GateKind kind) {
  switch (kind) {
    case GateKind::CX:
    case GateKind::CZ:
      return 1;
    case GateKind::SWAP:
      return 3;
    default:
      throw ContractError("not a two-qubit gate");
  }
}

double esp(const QuantumCircuit& c, const BackendModel& b, const Layout& layout) {
  if (c.empty()) return 1.0;
  require_physical(c, b, "esp");
  require_layout(c, b, layout, "esp");
  auto factor = [&](const Instruction& inst) {
    if (!is_basis(inst.kind)) {
      throw ContractError("esp: untranslated gate " + std::string(gate_name(inst.kind)));
    }
    if (inst.arity() == 2) {
      const int e = b.edge_index(inst.qubits[0], inst.qubits[1]);
      if (e < 0) throw ContractError("esp: two-qubit gate on uncoupled pair");
      return 1.0 - b.eps_2q(e);
    }
    return one_qubit_factor(inst, b);
  };
  return success_estimate(c, b, layout, factor, {});
}

double layout_quality(const QuantumCircuit& c, const BackendModel& b, const Layout& layout) {
  if (layout.initial.empty()) throw ContractError("layout_quality: layout missing");
  if (!layout.valid_for(b.num_physical())) throw ContractError("layout_quality: layout invalid for backend");
  const QuantumCircuit placed =
      c.qubit_space() == QubitSpace::Logical
          ? (c.num_qubits() > layout.num_logical()
                 ? throw ContractError("layout_quality: layout smaller than circuit")
                 : c.relabeled(layout.initial, b.num_physical(), QubitSpace::Physical))
          : c;
  require_physical(placed, b, "layout_quality");
  ExtraLoad extra;
  for (const auto& inst : placed.instructions()) {
    if (inst.arity() == 3) throw ContractError("layout_quality: three-qubit gate present");
    if (inst.arity() == 2) {
      const int hops = b.distance(inst.qubits[0], inst.qubits[1]) - 1;
      extra.depth += 3 * hops;
      extra.instances += static_cast<std::size_t>(3 * hops);
      extra.duration += 3 * hops * b.durations().twoq;
    }
  }
  auto factor = [&](const Instruction& inst) {
    if (inst.arity() == 2) {
      const int d = b.distance(inst.qubits[0], inst.qubits[1]);
      const double mean_eps = b.mean_path_eps_2q(inst.qubits[0], inst.qubits[1]);
      const double eps_eff = (d - 1) * 3 * mean_eps + mean_eps;
      return std::max(0.0, 1.0 - eps_eff);
    }
    return one_qubit_factor(inst, b);
  };
  return success_estimate(placed, b, layout, factor, extra);
}

double routing_quality(const QuantumCircuit& c, const BackendModel& b, const Layout& layout) {
  if (c.empty()) return 1.0;
  require_physical(c, b, "routing_quality");
  require_layout(c, b, layout, "routing_quality");
  auto factor = [&](const Instruction& inst) {
    if (inst.arity() == 3) throw ContractError("routing_quality: three-qubit gate present");
    if (inst.arity() == 2) {
      const int e = b.edge_index(inst.qubits[0], inst.qubits[1]);
      if (e < 0) throw ContractError("routing_quality: two-qubit gate on uncoupled pair");
      return std::pow(1.0 - b.eps_2q(e), two_qubit_decomposition_cost(inst.kind));
    }
    return one_qubit_factor(inst, b);
  };
  return success_estimate(c, b, layout, factor, {});
}

double duration_estimate(const QuantumCircuit& c, const BackendModel& b) {
  const CircuitDag dag(c);
  std::vector<double> layer_time(dag.depth(), 0.0);
  for (std::size_t n = 0; n < c.size(); ++n) {
    auto& slot = layer_time[dag.layer_of(n)];
    slot = std::max(slot, b.durations().of(c.instructions()[n].kind));
  }
  double total = 0.0;
  for (double t : layer_time) total += t;
  return total;
}

QualityReport quality_report(const QuantumCircuit& c, const BackendModel& b, const Layout& layout) {
  QualityReport r;
  r.esp = esp(c, b, layout);
  r.gate_counts = gate_counts(c);
  r.depth = depth(c);
  r.duration_estimate = duration_estimate(c, b);
  return r;
}

double structural_score(const QuantumCircuit& c, double reference) {
  const double size = static_cast<double>(gate_counts(c).gates()) + depth(c);
  return -size / std::max(reference, 1.0);
}

double Distribution::total() const {
  double s = 0.0;
  for (const auto& [_, p] : probs) s += p;
  return s;
}

double Distribution::at(std::uint64_t key) const {
  const auto it = probs.find(key);
  return it == probs.end() ? 0.0 : it->second;
}

std::string Distribution::bitstring(std::uint64_t key) const {
  std::string s(num_bits, '0');
  for (int bit = 0; bit < num_bits; ++bit) {
    if ((key >> bit) & 1U) s[num_bits - 1 - bit] = '1';
  }
  return s;
}

nlohmann::json Distribution::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, p] : probs) j[bitstring(k)] = p;
  return j;
}

double tvd(const Distribution& p, const Distribution& q) {
  if (p.num_bits != q.num_bits) throw ContractError("tvd: distributions have different bit widths");
  double sum = 0.0;
  auto a = p.probs.begin();
  auto b = q.probs.begin();
  while (a != p.probs.end() || b != q.probs.end()) {
    if (b == q.probs.end() || (a != p.probs.end() && a->first < b->first)) {
      sum += std::abs(a->second);
      ++a;
    } else if (a == p.probs.end() || b->first < a->first) {
      sum += std::abs(b->second);
      ++b;
    } else {
      sum += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

double soft_normalize(double x) { return x / std::sqrt(1.0 + x * x); }

double final_reward(double esp_rl, double esp_ref, double gates_rl, double gates_ref, double depth_rl,
                    double depth_ref, const RewardWeights& w) {
  if (!(esp_ref > 0.0)) throw ContractError("final_reward: reference ESP must be positive");
  const double log_ratio = esp_rl > 0.0 ? std::log(esp_rl / esp_ref) : -std::numeric_limits<double>::infinity();
  const double clipped = std::clamp(log_ratio, -w.clip, w.clip);
  const double r_gates = (gates_ref - gates_rl) / std::max(gates_ref, 1.0);
  const double r_depth = (depth_ref - depth_rl) / std::max(depth_ref, 1.0);
  return w.esp_weight * clipped + soft_normalize(w.gates_weight * r_gates + w.depth_weight * r_depth);
}

}  // namespace passforge
