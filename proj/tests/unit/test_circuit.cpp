#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "passforge/circuit.hpp"
#include "passforge/circuit_io.hpp"
#include "passforge/error.hpp"
#include "passforge/generators.hpp"

using namespace passforge;

TEST(Depth, EmptyIsZero) { EXPECT_EQ(depth(QuantumCircuit(3)), 0); }

TEST(Depth, SequentialChain) {
  QuantumCircuit c(1);
  c.gate(GateKind::X, 0).gate(GateKind::X, 0).gate(GateKind::X, 0);
  EXPECT_EQ(depth(c), 3);
}

TEST(Depth, ParallelThenEntangle) {
  QuantumCircuit c(2);
  c.gate(GateKind::H, 0).gate(GateKind::H, 1).gate(GateKind::CX, 0, 1);
  EXPECT_EQ(depth(c), oracle::naive_depth(c));
  EXPECT_EQ(depth(c), 2);
}

TEST(Depth, DagLayeringMatchesNaiveScanOnGenerated) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto c = random_circuit(2 + static_cast<int>(seed % 7), 4 + static_cast<int>(seed % 11), seed);
    const CircuitDag dag(c);
    EXPECT_EQ(dag.depth(), oracle::naive_depth(c));
    EXPECT_EQ(depth(c), dag.depth());
    for (std::size_t n = 0; n < dag.num_nodes(); ++n) {
      int expect = 0;
      for (auto p : dag.predecessors(n)) expect = std::max(expect, dag.layer_of(p) + 1);
      EXPECT_EQ(dag.layer_of(n), expect);
    }
  }
}

TEST(GateCounts, Basic) {
  EXPECT_EQ(gate_counts(QuantumCircuit(2)), GateCounts{});
  QuantumCircuit c(2);
  c.gate(GateKind::H, 0).gate(GateKind::CX, 0, 1).measure(0);
  EXPECT_EQ(gate_counts(c), (GateCounts{1, 1, 0, 1}));
}

TEST(GateCounts, Ghz4) {
  const auto c = benchmark_circuit(BenchmarkKind::GHZ, 4);
  EXPECT_EQ(gate_counts(c), (GateCounts{1, 3, 0, 4}));
}

TEST(Circuit, RejectsOutOfRangeAndDuplicates) {
  QuantumCircuit c(2);
  EXPECT_THROW(c.gate(GateKind::X, 2), ValidationError);
  EXPECT_THROW(c.gate(GateKind::CX, 1, 1), ValidationError);
  c.measure(0, 0);
  EXPECT_THROW(c.measure(1, 0), ValidationError);
}

TEST(Circuit, GatesAfterMeasurementInvalid) {
  QuantumCircuit c(1);
  c.measure(0).gate(GateKind::X, 0);
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Qasm, ParsesMinimal) {
  const auto c = parse_qasm_subset("qreg q[1]; x q[0];");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.instructions()[0].kind, GateKind::X);
  EXPECT_EQ(c.qubit_space(), QubitSpace::Logical);
}

TEST(Qasm, UnsupportedGate) {
  try {
    parse_qasm_subset("qreg q[2]; cnot q[0],q[1];");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("cnot"), std::string::npos);
  }
}

TEST(Qasm, SyntaxErrorCarriesPosition) {
  try {
    parse_qasm_subset("qreg q[2];\nx q[0]\nh q[1];");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Qasm, RegisterOverflow) { EXPECT_THROW(parse_qasm_subset("qreg q[65];"), ParseError); }

TEST(Qasm, AngleExpressions) {
  const auto c = parse_qasm_subset("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nrz(-pi/4) q[0]; // c\nrz(2*pi/3+0.5) q[0];");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c.instructions()[0].angle, -std::numbers::pi / 4);
  EXPECT_DOUBLE_EQ(c.instructions()[1].angle, 2 * std::numbers::pi / 3 + 0.5);
}

TEST(Qasm, RoundTripOverGenerators) {
  std::vector<QuantumCircuit> corpus;
  for (std::uint64_t s = 0; s < 20; ++s) corpus.push_back(random_circuit(5, 10, s));
  for (auto k : {BenchmarkKind::GHZ, BenchmarkKind::QFT, BenchmarkKind::QPE, BenchmarkKind::DeutschJozsa}) {
    corpus.push_back(benchmark_circuit(k, 5));
  }
  corpus.push_back(benchmark_circuit(BenchmarkKind::Grover, 3));
  for (const auto& c : corpus) {
    const auto back = parse_qasm_subset(serialize_qasm_subset(c, "round trip"));
    EXPECT_EQ(back.instructions(), c.instructions());
    EXPECT_EQ(back.measured_qubits(), c.measured_qubits());
  }
}

TEST(JsonCircuit, RoundTrip) {
  const auto c = random_circuit(4, 8, 3);
  EXPECT_EQ(circuit_from_json(circuit_to_json(c)), c);
}

TEST(RandomCircuit, Deterministic) { EXPECT_EQ(random_circuit(5, 10, 7), random_circuit(5, 10, 7)); }

TEST(RandomCircuit, IndicesInRangeAndDepthNearTarget) {
  for (int n = 5; n <= 15; ++n) {
    for (std::uint64_t seed = 0; seed < 100; seed += 11) {
      const int target = 2 * n + static_cast<int>(seed % (3 * n + 1));
      const auto c = random_circuit(n, target, seed);
      for (const auto& g : c.instructions()) {
        for (int q : g.operands()) EXPECT_LT(q, n);
      }
      EXPECT_LE(std::abs(depth(c) - target), 0.2 * target);
      EXPECT_EQ(c.num_clbits(), n);
    }
  }
}

TEST(RandomCircuit, SmallDepth) {
  const int d = depth(random_circuit(2, 4, 0));
  EXPECT_GE(d, 3);
  EXPECT_LE(d, 5);
}

TEST(Benchmarks, GhzDistribution) {
  const auto dist = oracle::distribution(benchmark_circuit(BenchmarkKind::GHZ, 3));
  EXPECT_NEAR(dist.at(0b000), 0.5, 1e-12);
  EXPECT_NEAR(dist.at(0b111), 0.5, 1e-12);
}

TEST(Benchmarks, QftUniform) {
  const auto dist = oracle::distribution(benchmark_circuit(BenchmarkKind::QFT, 4));
  ASSERT_EQ(dist.size(), 16u);
  for (const auto& [k, p] : dist) EXPECT_NEAR(p, 1.0 / 16, 1e-12);
}

TEST(Benchmarks, DeutschJozsaConstantAllZeros) {
  const auto dist = oracle::distribution(benchmark_circuit(BenchmarkKind::DeutschJozsa, 4));
  EXPECT_NEAR(dist.at(0), 1.0, 1e-12);
}

TEST(Benchmarks, DeutschJozsaBalancedNeverZero) {
  const auto dist = oracle::distribution(deutsch_jozsa(4, DjOracle::Balanced));
  EXPECT_LT(dist.count(0) ? dist.at(0) : 0.0, 1e-12);
}

TEST(Benchmarks, QpeMatchesAnalyticDistribution) {
  // Counting register of m qubits estimating phase phi: P(k) = |sum_j e^{2 pi i j (phi - k/2^m)}|^2 / 4^m
  const int n = 4;
  const int m = n - 1;
  const auto dist = oracle::distribution(benchmark_circuit(BenchmarkKind::QPE, n));
  const int size = 1 << m;
  for (int k = 0; k < size; ++k) {
    std::complex<double> amp = 0;
    for (int j = 0; j < size; ++j) {
      amp += std::exp(std::complex<double>(0, 2 * std::numbers::pi * j * (kQpePhase - static_cast<double>(k) / size)));
    }
    const double expect = std::norm(amp) / (size * size);
    const double got = dist.count(k) ? dist.at(k) : 0.0;
    EXPECT_NEAR(got, expect, 1e-9) << "k=" << k;
  }
}

TEST(Benchmarks, GroverAmplifiesMarked) {
  const auto d2 = oracle::distribution(benchmark_circuit(BenchmarkKind::Grover, 2));
  EXPECT_NEAR(d2.at(0b11), 1.0, 1e-9);
  const auto d3 = oracle::distribution(benchmark_circuit(BenchmarkKind::Grover, 3));
  EXPECT_GT(d3.at(0b111), 0.9);
}

TEST(Benchmarks, OutOfRangeRejected) {
  EXPECT_THROW(benchmark_circuit(BenchmarkKind::Grover, 5), ValidationError);
  EXPECT_THROW(benchmark_circuit(BenchmarkKind::GHZ, 1), ValidationError);
}

TEST(Benchmarks, KindNames) {
  for (auto k : {BenchmarkKind::GHZ, BenchmarkKind::QFT, BenchmarkKind::QPE, BenchmarkKind::DeutschJozsa,
                 BenchmarkKind::Grover}) {
    EXPECT_EQ(benchmark_kind_from_string(to_string(k)), k);
  }
}
