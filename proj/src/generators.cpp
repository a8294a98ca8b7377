#include "passforge/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "passforge/error.hpp"

namespace passforge {

QuantumCircuit random_circuit(int num_qubits, int depth_target, std::uint64_t seed) {
  if (num_qubits < 2) throw ContractError("random_circuit needs at least 2 qubits");
  if (depth_target < 2) throw ContractError("random_circuit needs depth_target >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  static constexpr GateKind kOneQ[] = {GateKind::X, GateKind::SX, GateKind::RZ,
                                       GateKind::H, GateKind::S,  GateKind::T};

  QuantumCircuit c(num_qubits);
  std::vector<int> order(num_qubits);
  for (int layer = 0; layer + 1 < depth_target; ++layer) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t i = 0;
    while (i < order.size()) {
      if (i + 1 < order.size() && unit(rng) < 0.5) {
        c.gate(unit(rng) < 0.5 ? GateKind::CX : GateKind::CZ, order[i], order[i + 1]);
        i += 2;
        continue;
      }
      const int q = order[i++];
      if (unit(rng) < 0.03) {
        c.gate(GateKind::I, q);
        continue;
      }
      const GateKind kind = kOneQ[static_cast<std::size_t>(unit(rng) * std::size(kOneQ)) % std::size(kOneQ)];
      if (kind == GateKind::RZ) {
        c.rz((2.0 * unit(rng) - 1.0) * std::numbers::pi, q);
      } else {
        c.gate(kind, q);
      }
    }
  }
  c.measure_all();
  return c;
}

BenchmarkKind benchmark_kind_from_string(std::string_view name) {
  if (name == "ghz" || name == "GHZ") return BenchmarkKind::GHZ;
  if (name == "qft" || name == "QFT") return BenchmarkKind::QFT;
  if (name == "qpe" || name == "QPE") return BenchmarkKind::QPE;
  if (name == "dj" || name == "DeutschJozsa" || name == "deutsch_jozsa") return BenchmarkKind::DeutschJozsa;
  if (name == "grover" || name == "Grover") return BenchmarkKind::Grover;
  throw ValidationError("unknown benchmark kind '" + std::string(name) + "'");
}

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::GHZ: return "ghz";
    case BenchmarkKind::QFT: return "qft";
    case BenchmarkKind::QPE: return "qpe";
    case BenchmarkKind::DeutschJozsa: return "dj";
    case BenchmarkKind::Grover: return "grover";
  }
  return "?";
}

void append_controlled_phase(QuantumCircuit& c, double theta, int control, int target) {
  c.rz(theta / 2, control);
  c.gate(GateKind::CX, control, target);
  c.rz(-theta / 2, target);
  c.gate(GateKind::CX, control, target);
  c.rz(theta / 2, target);
}

namespace {

void require_range(BenchmarkKind kind, int n, int lo, int hi) {
  if (n < lo || n > hi) {
    throw ValidationError(std::string(to_string(kind)) + " supports n in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "], got " + std::to_string(n));
  }
}

void append_inverse_qft(QuantumCircuit& c, int m) {
  for (int i = 0; i < m / 2; ++i) c.gate(GateKind::SWAP, i, m - 1 - i);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < j; ++k) append_controlled_phase(c, -std::numbers::pi / std::ldexp(1.0, j - k), k, j);
    c.gate(GateKind::H, j);
  }
}

void append_ccz(QuantumCircuit& c, int a, int b, int t) {
  c.gate(GateKind::H, t);
  c.gate(GateKind::CCX, a, b, t);
  c.gate(GateKind::H, t);
}

QuantumCircuit grover(int n) {
  QuantumCircuit c(n);
  auto phase_flip_all_ones = [&] {
    if (n == 2) {
      c.gate(GateKind::CZ, 0, 1);
    } else {
      append_ccz(c, 0, 1, 2);
    }
  };
  for (int q = 0; q < n; ++q) c.gate(GateKind::H, q);
  const int iterations = static_cast<int>(std::floor(std::numbers::pi / 4 * std::sqrt(std::ldexp(1.0, n))));
  for (int it = 0; it < iterations; ++it) {
    phase_flip_all_ones();
    for (int q = 0; q < n; ++q) c.gate(GateKind::H, q);
    for (int q = 0; q < n; ++q) c.gate(GateKind::X, q);
    phase_flip_all_ones();
    for (int q = 0; q < n; ++q) c.gate(GateKind::X, q);
    for (int q = 0; q < n; ++q) c.gate(GateKind::H, q);
  }
  c.measure_all();
  return c;
}

}  // namespace

QuantumCircuit deutsch_jozsa(int n, DjOracle oracle) {
  require_range(BenchmarkKind::DeutschJozsa, n, 2, 16);
  const int anc = n - 1;
  QuantumCircuit c(n);
  c.gate(GateKind::X, anc);
  c.gate(GateKind::H, anc);
  for (int q = 0; q < anc; ++q) c.gate(GateKind::H, q);
  if (oracle == DjOracle::Constant) {
    c.gate(GateKind::X, anc);
  } else {
    for (int q = 0; q < anc; ++q) c.gate(GateKind::CX, q, anc);
  }
  for (int q = 0; q < anc; ++q) c.gate(GateKind::H, q);
  for (int q = 0; q < anc; ++q) c.measure(q);
  return c;
}

QuantumCircuit benchmark_circuit(BenchmarkKind kind, int n) {
  switch (kind) {
    case BenchmarkKind::GHZ: {
      require_range(kind, n, 2, 16);
      QuantumCircuit c(n);
      c.gate(GateKind::H, 0);
      for (int q = 0; q + 1 < n; ++q) c.gate(GateKind::CX, q, q + 1);
      c.measure_all();
      return c;
    }
    case BenchmarkKind::QFT: {
      require_range(kind, n, 2, 14);
      QuantumCircuit c(n);
      for (int j = 0; j < n; ++j) {
        c.gate(GateKind::H, j);
        for (int k = j + 1; k < n; ++k) append_controlled_phase(c, std::numbers::pi / std::ldexp(1.0, k - j), k, j);
      }
      for (int i = 0; i < n / 2; ++i) c.gate(GateKind::SWAP, i, n - 1 - i);
      c.measure_all();
      return c;
    }
    case BenchmarkKind::QPE: {
      require_range(kind, n, 2, 14);
      const int m = n - 1;
      QuantumCircuit c(n);
      c.gate(GateKind::X, m);
      for (int q = 0; q < m; ++q) c.gate(GateKind::H, q);
      for (int j = 0; j < m; ++j) {
        append_controlled_phase(c, 2 * std::numbers::pi * kQpePhase * std::ldexp(1.0, j), j, m);
      }
      append_inverse_qft(c, m);
      for (int q = 0; q < m; ++q) c.measure(q);
      return c;
    }
    case BenchmarkKind::DeutschJozsa:
      return deutsch_jozsa(n, DjOracle::Constant);
    case BenchmarkKind::Grover:
      require_range(kind, n, 2, 3);
      return grover(n);
  }
  throw ContractError("unhandled benchmark kind");
}

}  // namespace passforge
