#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "passforge/backend.hpp"
#include "passforge/circuit.hpp"
#include "passforge/layout.hpp"
#include "passforge/metrics.hpp"

namespace passforge {

inline constexpr int kMaxSimulatedQubits = 14;

struct NoiseConfig {
  bool enabled = true;
  double noise_scale = 1.0;  // multiplies every error probability
  double t1_t2_scale = 1.0;  // multiplies coherence times
  std::uint64_t seed = 0;
  int shots = 8192;
  int trajectories = 256;  // shots are split evenly across trajectories
};

/// Dense statevector over n qubits; qubit q is bit q of the basis index.
class Statevector {
 public:
  explicit Statevector(int num_qubits);

  int num_qubits() const { return n_; }
  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

  /// Applies a unitary instruction; MEASURE is ignored.
  void apply(const Instruction& inst);
  /// Pauli on one qubit: 0 = I, 1 = X, 2 = Y, 3 = Z.
  void apply_pauli(int q, int pauli);

  double norm() const;
  std::vector<double> probabilities() const;

 private:
  void apply_1q(int q, const std::complex<double> (&m)[4]);

  int n_;
  std::vector<std::complex<double>> amp_;
};

/// Exact measurement distribution over the circuit's classical bits.
/// Untouched qubits are dropped first, so wide physical circuits simulate
/// at the cost of their active qubits only.
Distribution ideal_distribution(const QuantumCircuit& c);

/// Seeded shot sampling under stochastic Pauli noise: depolarizing Pauli
/// insertion after each gate, per-layer X/Z decoherence kicks, readout flips.
Distribution noisy_distribution(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                const NoiseConfig& cfg);

/// Empirical distribution of `shots` draws from `p`.
Distribution sample_distribution(const Distribution& p, int shots, std::uint64_t seed);

}  // namespace passforge
