#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace passforge {

enum class GateKind : std::uint8_t { I, X, SX, RZ, H, S, T, CX, CZ, SWAP, CCX, MEASURE };

inline constexpr int kNumGateKinds = 12;

/// Number of qubit operands taken by a gate kind.
constexpr int arity(GateKind kind) {
  switch (kind) {
    case GateKind::CX:
    case GateKind::CZ:
    case GateKind::SWAP:
      return 2;
    case GateKind::CCX:
      return 3;
    default:
      return 1;
  }
}

constexpr bool is_unitary(GateKind kind) { return kind != GateKind::MEASURE; }

/// Hardware basis: RZ, SX, X, CZ (measurement is always allowed).
constexpr bool is_basis(GateKind kind) {
  return kind == GateKind::RZ || kind == GateKind::SX || kind == GateKind::X || kind == GateKind::CZ ||
         kind == GateKind::MEASURE;
}

std::string_view gate_name(GateKind kind);

/// Lowercase QASM mnemonic ("id", "x", ..., "measure").
std::string_view qasm_name(GateKind kind);

/// RZ angles below this magnitude are treated as identity.
inline constexpr double kIdentityAngleTolerance = 1e-10;

struct Instruction {
  GateKind kind = GateKind::I;
  std::array<int, 3> qubits{-1, -1, -1};
  double angle = 0.0;  // RZ only
  int clbit = -1;      // MEASURE only

  int arity() const { return passforge::arity(kind); }
  std::span<const int> operands() const { return {qubits.data(), static_cast<std::size_t>(arity())}; }
  bool acts_on(int q) const;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

Instruction make_gate(GateKind kind, int q0, int q1 = -1, int q2 = -1);
Instruction make_rz(double angle, int q);
Instruction make_measure(int qubit, int clbit);

enum class QubitSpace : std::uint8_t { Logical, Physical };

/// Gate list over logical or physical qubits. Measurements are terminal per
/// wire: once a qubit is measured no later instruction may touch it.
class QuantumCircuit {
 public:
  QuantumCircuit() = default;
  explicit QuantumCircuit(int num_qubits, QubitSpace space = QubitSpace::Logical);

  int num_qubits() const { return num_qubits_; }
  QubitSpace qubit_space() const { return space_; }
  const std::vector<Instruction>& instructions() const { return instructions_; }
  std::size_t size() const { return instructions_.size(); }
  bool empty() const { return instructions_.empty(); }

  /// measured_qubits()[c] is the qubit recorded into classical bit c.
  const std::vector<int>& measured_qubits() const { return measured_; }
  int num_clbits() const { return static_cast<int>(measured_.size()); }

  QuantumCircuit& append(const Instruction& inst);
  QuantumCircuit& gate(GateKind kind, int q0, int q1 = -1, int q2 = -1) {
    return append(make_gate(kind, q0, q1, q2));
  }
  QuantumCircuit& rz(double angle, int q) { return append(make_rz(angle, q)); }
  /// Measures `qubit` into the next free classical bit.
  QuantumCircuit& measure(int qubit);
  QuantumCircuit& measure(int qubit, int clbit) { return append(make_measure(qubit, clbit)); }
  QuantumCircuit& measure_all();

  /// Rebuilds a circuit of the same shape with a new instruction list.
  QuantumCircuit with_instructions(std::vector<Instruction> instructions) const;
  /// Relabels every qubit through `mapping` into a circuit of `new_width` qubits.
  QuantumCircuit relabeled(std::span<const int> mapping, int new_width, QubitSpace space) const;

  /// Throws ValidationError when any invariant is broken.
  void validate() const;

  friend bool operator==(const QuantumCircuit&, const QuantumCircuit&) = default;

 private:
  int num_qubits_ = 0;
  QubitSpace space_ = QubitSpace::Logical;
  std::vector<Instruction> instructions_;
  std::vector<int> measured_;
};

struct GateCounts {
  std::size_t one_qubit = 0;
  std::size_t two_qubit = 0;
  std::size_t three_qubit = 0;
  std::size_t measurements = 0;

  std::size_t total() const { return one_qubit + two_qubit + three_qubit + measurements; }
  std::size_t gates() const { return one_qubit + two_qubit + three_qubit; }
  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

GateCounts gate_counts(const QuantumCircuit& c);

/// Qubit-wise dependency DAG with ASAP layering.
class CircuitDag {
 public:
  explicit CircuitDag(const QuantumCircuit& c);

  std::size_t num_nodes() const { return layer_of_.size(); }
  /// 0-based layer; layer_of(n) = 1 + max over predecessors, counted from 0.
  int layer_of(std::size_t node) const { return layer_of_[node]; }
  const std::vector<int>& layers() const { return layer_of_; }
  const std::vector<std::size_t>& predecessors(std::size_t node) const { return preds_[node]; }
  const std::vector<std::size_t>& successors(std::size_t node) const { return succs_[node]; }
  int depth() const { return depth_; }
  /// Instruction indices grouped by layer.
  std::vector<std::vector<std::size_t>> layer_groups() const;

 private:
  std::vector<int> layer_of_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
  int depth_ = 0;
};

/// Longest qubit-wise dependency chain; measurements contribute.
int depth(const QuantumCircuit& c);

/// Qubits touched by at least one instruction.
std::vector<bool> touched_qubits(const QuantumCircuit& c);

bool has_three_qubit_gates(const QuantumCircuit& c);
std::size_t count_out_of_basis(const QuantumCircuit& c);

/// Order-sensitive 64-bit fingerprint of the circuit contents.
std::uint64_t circuit_hash(const QuantumCircuit& c);

}  // namespace passforge
