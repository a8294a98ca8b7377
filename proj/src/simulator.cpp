#include "passforge/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"
#include "passforge/parallel.hpp"
#include "passforge/unitary.hpp"

namespace passforge {

Statevector::Statevector(int num_qubits) : n_(num_qubits) {
  if (num_qubits < 0 || num_qubits > kMaxSimulatedQubits) {
    throw ContractError("statevector supports at most " + std::to_string(kMaxSimulatedQubits) + " qubits");
  }
  amp_.assign(std::size_t{1} << num_qubits, 0.0);
  amp_[0] = 1.0;
}

void Statevector::apply_1q(int q, const std::complex<double> (&m)[4]) {
  const std::size_t mask = std::size_t{1} << q;
  for (std::size_t i = 0; i < amp_.size(); ++i) {
    if (i & mask) continue;
    const auto a0 = amp_[i];
    const auto a1 = amp_[i | mask];
    amp_[i] = m[0] * a0 + m[1] * a1;
    amp_[i | mask] = m[2] * a0 + m[3] * a1;
  }
}

void Statevector::apply(const Instruction& inst) {
  const auto& q = inst.qubits;
  switch (inst.kind) {
    case GateKind::MEASURE:
    case GateKind::I:
      return;
    case GateKind::CX: {
      const std::size_t c = std::size_t{1} << q[0];
      const std::size_t t = std::size_t{1} << q[1];
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if ((i & c) && !(i & t)) std::swap(amp_[i], amp_[i | t]);
      }
      return;
    }
    case GateKind::CZ: {
      const std::size_t both = (std::size_t{1} << q[0]) | (std::size_t{1} << q[1]);
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if ((i & both) == both) amp_[i] = -amp_[i];
      }
      return;
    }
    case GateKind::SWAP: {
      const std::size_t a = std::size_t{1} << q[0];
      const std::size_t b = std::size_t{1} << q[1];
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if ((i & a) && !(i & b)) std::swap(amp_[i], amp_[(i & ~a) | b]);
      }
      return;
    }
    case GateKind::CCX: {
      const std::size_t both = (std::size_t{1} << q[0]) | (std::size_t{1} << q[1]);
      const std::size_t t = std::size_t{1} << q[2];
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if ((i & both) == both && !(i & t)) std::swap(amp_[i], amp_[i | t]);
      }
      return;
    }
    default: {
      const Mat2 u = one_qubit_matrix(inst.kind, inst.angle);
      const std::complex<double> m[4] = {u.m[0], u.m[1], u.m[2], u.m[3]};
      apply_1q(q[0], m);
    }
  }
}

void Statevector::apply_pauli(int q, int pauli) {
  const std::size_t mask = std::size_t{1} << q;
  switch (pauli) {
    case 1:
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if (!(i & mask)) std::swap(amp_[i], amp_[i | mask]);
      }
      break;
    case 2: {
      const std::complex<double> j(0, 1);
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if (i & mask) continue;
        const auto a0 = amp_[i];
        amp_[i] = -j * amp_[i | mask];
        amp_[i | mask] = j * a0;
      }
      break;
    }
    case 3:
      for (std::size_t i = 0; i < amp_.size(); ++i) {
        if (i & mask) amp_[i] = -amp_[i];
      }
      break;
    default:
      break;
  }
}

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amp_) s += std::norm(a);
  return std::sqrt(s);
}

std::vector<double> Statevector::probabilities() const {
  std::vector<double> p(amp_.size());
  for (std::size_t i = 0; i < amp_.size(); ++i) p[i] = std::norm(amp_[i]);
  return p;
}

namespace {

struct Compacted {
  QuantumCircuit circuit;
  std::vector<int> original;  // compact qubit -> original qubit
};

Compacted compact(const QuantumCircuit& c) {
  const auto touched = touched_qubits(c);
  std::vector<int> mapping(c.num_qubits(), -1);
  Compacted out;
  for (int q = 0; q < c.num_qubits(); ++q) {
    if (touched[q]) {
      mapping[q] = static_cast<int>(out.original.size());
      out.original.push_back(q);
    }
  }
  const int width = static_cast<int>(out.original.size());
  if (width > kMaxSimulatedQubits) {
    throw ContractError("circuit touches " + std::to_string(width) + " qubits; simulator limit is " +
                        std::to_string(kMaxSimulatedQubits));
  }
  for (int q = 0; q < c.num_qubits(); ++q) {
    if (mapping[q] < 0) mapping[q] = width;  // never referenced
  }
  out.circuit = QuantumCircuit(width, c.qubit_space());
  for (Instruction g : c.instructions()) {
    for (int i = 0; i < g.arity(); ++i) g.qubits[i] = mapping[g.qubits[i]];
    out.circuit.append(g);
  }
  return out;
}

// Classical key of a compact basis index.
std::vector<std::uint64_t> clbit_keys(const QuantumCircuit& c) {
  const std::size_t dim = std::size_t{1} << c.num_qubits();
  std::vector<std::uint64_t> keys(dim, 0);
  const auto& measured = c.measured_qubits();
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t k = 0;
    for (std::size_t cb = 0; cb < measured.size(); ++cb) {
      if ((i >> measured[cb]) & 1U) k |= std::uint64_t{1} << cb;
    }
    keys[i] = k;
  }
  return keys;
}

Statevector run_ideal(const QuantumCircuit& c) {
  Statevector sv(c.num_qubits());
  for (const auto& g : c.instructions()) sv.apply(g);
  return sv;
}

std::size_t draw_index(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const double x = u(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

Distribution counts_to_distribution(int num_bits, const std::map<std::uint64_t, long>& counts, long shots) {
  Distribution d;
  d.num_bits = num_bits;
  for (const auto& [k, n] : counts) d.probs[k] = static_cast<double>(n) / static_cast<double>(shots);
  return d;
}

}  // namespace

Distribution ideal_distribution(const QuantumCircuit& c) {
  const Compacted cc = compact(c);
  const Statevector sv = run_ideal(cc.circuit);
  const auto keys = clbit_keys(cc.circuit);
  const auto probs = sv.probabilities();
  Distribution d;
  d.num_bits = c.num_clbits();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) d.probs[keys[i]] += probs[i];
  }
  return d;
}

Distribution sample_distribution(const Distribution& p, int shots, std::uint64_t seed) {
  if (shots < 1) throw ContractError("shots must be >= 1");
  std::vector<std::uint64_t> keys;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& [k, prob] : p.probs) {
    acc += prob;
    keys.push_back(k);
    cumulative.push_back(acc);
  }
  std::map<std::uint64_t, long> counts;
  if (keys.empty()) {
    counts[0] = shots;
  } else {
    std::mt19937_64 rng(seed);
    for (int s = 0; s < shots; ++s) ++counts[keys[draw_index(cumulative, rng)]];
  }
  return counts_to_distribution(p.num_bits, counts, shots);
}

Distribution noisy_distribution(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                const NoiseConfig& cfg) {
  if (cfg.shots < 1) throw ContractError("shots must be >= 1");
  if (cfg.noise_scale < 0.0) throw ContractError("noise_scale must be >= 0");
  if (cfg.t1_t2_scale <= 0.0) throw ContractError("t1_t2_scale must be > 0");
  if (!c.empty() && layout.initial.empty()) throw ContractError("noisy simulation needs a layout");
  if (c.qubit_space() != QubitSpace::Physical || c.num_qubits() > b.num_physical()) {
    throw ContractError("noisy simulation needs a placed circuit");
  }
  for (const auto& g : c.instructions()) {
    if (!is_basis(g.kind)) throw ContractError("noisy simulation: untranslated gate " + std::string(gate_name(g.kind)));
    if (g.arity() == 2 && !b.adjacent(g.qubits[0], g.qubits[1])) {
      throw ContractError("noisy simulation: two-qubit gate on uncoupled pair");
    }
  }
  if (!cfg.enabled || cfg.noise_scale == 0.0) return sample_distribution(ideal_distribution(c), cfg.shots, cfg.seed);

  const Compacted cc = compact(c);
  const QuantumCircuit& sim = cc.circuit;
  const auto keys = clbit_keys(sim);
  const int n = sim.num_qubits();
  const double scale = cfg.noise_scale;

  // Per-gate depolarizing probabilities, unitary gates grouped by layer.
  std::vector<Instruction> unitary;
  std::vector<double> p_gate;
  for (const auto& g : sim.instructions()) {
    if (g.kind == GateKind::MEASURE) continue;
    unitary.push_back(g);
    if (g.arity() == 2) {
      p_gate.push_back(scale * b.eps_2q(cc.original[g.qubits[0]], cc.original[g.qubits[1]]));
    } else {
      p_gate.push_back(scale * b.eps_1q(cc.original[g.qubits[0]]));
    }
  }
  const QuantumCircuit unitary_circuit = sim.with_instructions(unitary);
  const CircuitDag dag(unitary_circuit);
  const auto layers = dag.layer_groups();
  std::vector<std::vector<double>> p_x(layers.size(), std::vector<double>(n));
  std::vector<std::vector<double>> p_z(layers.size(), std::vector<double>(n));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    double t = 0.0;
    for (std::size_t i : layers[l]) t = std::max(t, b.durations().of(unitary[i].kind));
    for (int q = 0; q < n; ++q) {
      const double t1 = b.t1(cc.original[q]) * cfg.t1_t2_scale;
      const double t2 = b.t2(cc.original[q]) * cfg.t1_t2_scale;
      const double inv_phi = std::max(0.0, 1.0 / t2 - 0.5 / t1);
      p_x[l][q] = std::clamp(scale * (1.0 - std::exp(-t / t1)), 0.0, 1.0);
      p_z[l][q] = std::clamp(scale * (1.0 - std::exp(-t * inv_phi)), 0.0, 1.0);
    }
  }
  std::vector<double> p_readout(sim.num_clbits());
  for (int cb = 0; cb < sim.num_clbits(); ++cb) {
    p_readout[cb] = std::clamp(scale * b.eps_readout(cc.original[sim.measured_qubits()[cb]]), 0.0, 1.0);
  }

  const int trajectories = std::clamp(cfg.trajectories, 1, cfg.shots);
  std::vector<std::map<std::uint64_t, long>> partial(trajectories);
  parallel_for(static_cast<std::size_t>(trajectories), [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(cfg.seed, t));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Statevector sv(n);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i : layers[l]) {
        const Instruction& g = unitary[i];
        sv.apply(g);
        if (u(rng) < p_gate[i]) {
          if (g.arity() == 2) {
            const int k = std::uniform_int_distribution<int>(1, 15)(rng);
            sv.apply_pauli(g.qubits[0], k % 4);
            sv.apply_pauli(g.qubits[1], k / 4);
          } else {
            sv.apply_pauli(g.qubits[0], std::uniform_int_distribution<int>(1, 3)(rng));
          }
        }
      }
      for (int q = 0; q < n; ++q) {
        if (u(rng) < p_x[l][q]) sv.apply_pauli(q, 1);
        if (u(rng) < p_z[l][q]) sv.apply_pauli(q, 3);
      }
    }
    const auto probs = sv.probabilities();
    std::vector<double> cumulative(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) cumulative[i] = acc += probs[i];
    const long shots_here = cfg.shots / trajectories + (static_cast<long>(t) < cfg.shots % trajectories ? 1 : 0);
    for (long s = 0; s < shots_here; ++s) {
      std::uint64_t key = keys[draw_index(cumulative, rng)];
      for (std::size_t cb = 0; cb < p_readout.size(); ++cb) {
        if (u(rng) < p_readout[cb]) key ^= std::uint64_t{1} << cb;
      }
      ++partial[t][key];
    }
  });
  std::map<std::uint64_t, long> counts;
  for (const auto& m : partial) {
    for (const auto& [k, v] : m) counts[k] += v;
  }
  return counts_to_distribution(c.num_clbits(), counts, cfg.shots);
}

}  // namespace passforge
