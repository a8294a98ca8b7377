#include "passforge/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

std::string_view gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::I: return "I";
    case GateKind::X: return "X";
    case GateKind::SX: return "SX";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::T: return "T";
    case GateKind::CX: return "CX";
    case GateKind::CZ: return "CZ";
    case GateKind::SWAP: return "SWAP";
    case GateKind::CCX: return "CCX";
    case GateKind::MEASURE: return "MEASURE";
  }
  return "?";
}

std::string_view qasm_name(GateKind kind) {
  switch (kind) {
    case GateKind::I: return "id";
    case GateKind::X: return "x";
    case GateKind::SX: return "sx";
    case GateKind::RZ: return "rz";
    case GateKind::H: return "h";
    case GateKind::S: return "s";
    case GateKind::T: return "t";
    case GateKind::CX: return "cx";
    case GateKind::CZ: return "cz";
    case GateKind::SWAP: return "swap";
    case GateKind::CCX: return "ccx";
    case GateKind::MEASURE: return "measure";
  }
  return "?";
}

bool Instruction::acts_on(int q) const {
  for (int op : operands()) {
    if (op == q) return true;
  }
  return false;
}

Instruction make_gate(GateKind kind, int q0, int q1, int q2) {
  if (kind == GateKind::MEASURE) throw ContractError("use make_measure for measurements");
  Instruction inst;
  inst.kind = kind;
  inst.qubits = {q0, q1, q2};
  for (int i = arity(kind); i < 3; ++i) inst.qubits[i] = -1;
  return inst;
}

Instruction make_rz(double angle, int q) {
  Instruction inst = make_gate(GateKind::RZ, q);
  inst.angle = angle;
  return inst;
}

Instruction make_measure(int qubit, int clbit) {
  Instruction inst;
  inst.kind = GateKind::MEASURE;
  inst.qubits = {qubit, -1, -1};
  inst.clbit = clbit;
  return inst;
}

QuantumCircuit::QuantumCircuit(int num_qubits, QubitSpace space) : num_qubits_(num_qubits), space_(space) {
  if (num_qubits < 0) throw ValidationError("negative qubit count");
}

QuantumCircuit& QuantumCircuit::append(const Instruction& inst) {
  const int n = inst.arity();
  for (int i = 0; i < n; ++i) {
    const int q = inst.qubits[i];
    if (q < 0 || q >= num_qubits_) {
      throw ValidationError("qubit index " + std::to_string(q) + " out of range for " + std::to_string(num_qubits_) +
                            "-qubit circuit");
    }
    for (int j = 0; j < i; ++j) {
      if (inst.qubits[j] == q) throw ValidationError("repeated operand in " + std::string(gate_name(inst.kind)));
    }
  }
  if (inst.kind == GateKind::MEASURE) {
    if (inst.clbit < 0) throw ValidationError("measurement without classical bit");
    if (static_cast<std::size_t>(inst.clbit) >= measured_.size()) measured_.resize(inst.clbit + 1, -1);
    if (measured_[inst.clbit] != -1) {
      throw ValidationError("classical bit " + std::to_string(inst.clbit) + " written twice");
    }
    measured_[inst.clbit] = inst.qubits[0];
  }
  instructions_.push_back(inst);
  return *this;
}

QuantumCircuit& QuantumCircuit::measure(int qubit) { return measure(qubit, num_clbits()); }

QuantumCircuit& QuantumCircuit::measure_all() {
  for (int q = 0; q < num_qubits_; ++q) measure(q);
  return *this;
}

QuantumCircuit QuantumCircuit::with_instructions(std::vector<Instruction> instructions) const {
  QuantumCircuit out(num_qubits_, space_);
  out.instructions_.reserve(instructions.size());
  for (const auto& inst : instructions) out.append(inst);
  return out;
}

QuantumCircuit QuantumCircuit::relabeled(std::span<const int> mapping, int new_width, QubitSpace space) const {
  if (mapping.size() < static_cast<std::size_t>(num_qubits_)) throw ContractError("relabel mapping too short");
  QuantumCircuit out(new_width, space);
  out.instructions_.reserve(instructions_.size());
  for (Instruction inst : instructions_) {
    for (int i = 0; i < inst.arity(); ++i) inst.qubits[i] = mapping[inst.qubits[i]];
    out.append(inst);
  }
  return out;
}

void QuantumCircuit::validate() const {
  std::vector<bool> measured(num_qubits_, false);
  std::vector<bool> seen_clbit;
  for (const auto& inst : instructions_) {
    for (int q : inst.operands()) {
      if (q < 0 || q >= num_qubits_) throw ValidationError("qubit index out of range");
      if (measured[q]) throw ValidationError("instruction after measurement on qubit " + std::to_string(q));
    }
    if (inst.kind == GateKind::MEASURE) measured[inst.qubits[0]] = true;
  }
  for (std::size_t c = 0; c < measured_.size(); ++c) {
    if (measured_[c] < 0) throw ValidationError("classical bit " + std::to_string(c) + " never written");
  }
}

GateCounts gate_counts(const QuantumCircuit& c) {
  GateCounts counts;
  for (const auto& inst : c.instructions()) {
    if (inst.kind == GateKind::MEASURE) {
      ++counts.measurements;
      continue;
    }
    switch (inst.arity()) {
      case 1: ++counts.one_qubit; break;
      case 2: ++counts.two_qubit; break;
      default: ++counts.three_qubit; break;
    }
  }
  return counts;
}

CircuitDag::CircuitDag(const QuantumCircuit& c)
    : layer_of_(c.size(), 0), preds_(c.size()), succs_(c.size()) {
  std::vector<long> last(c.num_qubits(), -1);
  const auto& insts = c.instructions();
  for (std::size_t n = 0; n < insts.size(); ++n) {
    int layer = 0;
    for (int q : insts[n].operands()) {
      const long p = last[q];
      if (p >= 0) {
        const auto pred = static_cast<std::size_t>(p);
        if (std::find(preds_[n].begin(), preds_[n].end(), pred) == preds_[n].end()) {
          preds_[n].push_back(pred);
          succs_[pred].push_back(n);
        }
        layer = std::max(layer, layer_of_[pred] + 1);
      }
      last[q] = static_cast<long>(n);
    }
    layer_of_[n] = layer;
    depth_ = std::max(depth_, layer + 1);
  }
}

std::vector<std::vector<std::size_t>> CircuitDag::layer_groups() const {
  std::vector<std::vector<std::size_t>> groups(depth_);
  for (std::size_t n = 0; n < layer_of_.size(); ++n) groups[layer_of_[n]].push_back(n);
  return groups;
}

int depth(const QuantumCircuit& c) {
  std::vector<int> frontier(c.num_qubits(), 0);
  int d = 0;
  for (const auto& inst : c.instructions()) {
    int level = 0;
    for (int q : inst.operands()) level = std::max(level, frontier[q]);
    ++level;
    for (int q : inst.operands()) frontier[q] = level;
    d = std::max(d, level);
  }
  return d;
}

std::vector<bool> touched_qubits(const QuantumCircuit& c) {
  std::vector<bool> touched(c.num_qubits(), false);
  for (const auto& inst : c.instructions()) {
    for (int q : inst.operands()) touched[q] = true;
  }
  return touched;
}

bool has_three_qubit_gates(const QuantumCircuit& c) {
  return std::any_of(c.instructions().begin(), c.instructions().end(),
                     [](const Instruction& i) { return i.arity() >= 3; });
}

std::size_t count_out_of_basis(const QuantumCircuit& c) {
  return static_cast<std::size_t>(std::count_if(c.instructions().begin(), c.instructions().end(),
                                                [](const Instruction& i) { return !is_basis(i.kind); }));
}

std::uint64_t circuit_hash(const QuantumCircuit& c) {
  Fnv1a h;
  h.add(c.num_qubits());
  h.add(static_cast<int>(c.qubit_space()));
  for (const auto& inst : c.instructions()) {
    h.add(static_cast<int>(inst.kind));
    for (int q : inst.qubits) h.add(q);
    h.add(std::bit_cast<std::uint64_t>(inst.angle));
    h.add(inst.clbit);
  }
  return h.value();
}

}  // namespace passforge
