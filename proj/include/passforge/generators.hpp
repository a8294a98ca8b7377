#pragma once

#include <cstdint>
#include <string_view>

#include "passforge/circuit.hpp"

namespace passforge {

/// Random logical circuit of full gate layers followed by measurement of
/// every qubit. Each layer pairs qubits into CX/CZ gates with probability
/// 0.5 and fills the rest with random one-qubit gates, so the realized depth
/// is `depth_target` exactly (layers plus the measurement layer).
QuantumCircuit random_circuit(int num_qubits, int depth_target, std::uint64_t seed);

enum class BenchmarkKind { GHZ, QFT, QPE, DeutschJozsa, Grover };

BenchmarkKind benchmark_kind_from_string(std::string_view name);
std::string_view to_string(BenchmarkKind kind);

/// Textbook constructions over the gate set:
///   GHZ           n in [2, 16]   H + CX chain, all measured.
///   QFT           n in [2, 14]   QFT on |0...0>, controlled phases as RZ/CX, final swaps.
///   QPE           n in [2, 14]   n-1 counting qubits + 1 eigenstate qubit, phase 1/3
///                                (inexact), counting qubits measured.
///   DeutschJozsa  n in [2, 16]   n-1 inputs + 1 ancilla, constant oracle f(x)=1;
///                                input qubits measured.
///   Grover        n in [2, 3]    marked state |1...1>, floor(pi/4 sqrt(2^n)) iterations.
QuantumCircuit benchmark_circuit(BenchmarkKind kind, int n);

enum class DjOracle { Constant, Balanced };

/// Deutsch-Jozsa with an explicit oracle; Balanced uses f(x) = parity(x).
QuantumCircuit deutsch_jozsa(int n, DjOracle oracle);

/// Eigenphase used by the QPE benchmark.
inline constexpr double kQpePhase = 1.0 / 3.0;

/// Appends a controlled phase(theta) built from RZ and CX.
void append_controlled_phase(QuantumCircuit& c, double theta, int control, int target);

}  // namespace passforge
