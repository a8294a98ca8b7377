#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "oracles.hpp"
#include "passforge/backend.hpp"
#include "passforge/generators.hpp"
#include "passforge/passes.hpp"
#include "passforge/simulator.hpp"

using namespace passforge;

namespace {

struct Placed {
  QuantumCircuit circuit;
  Layout layout;
};

Placed compile_basic(const QuantumCircuit& c, const BackendModel& b) {
  const auto placed = apply_trivial_layout(apply_unroll_3q(c).circuit, b);
  const auto routed = apply_basic_swap(placed.circuit, b, *placed.layout);
  return {apply_basis_translation(routed.circuit).circuit, *routed.layout};
}

Distribution from_map(int bits, const std::map<std::uint64_t, double>& m) { return Distribution{bits, m}; }

}  // namespace

TEST(Ideal, GhzThree) {
  const auto d = ideal_distribution(benchmark_circuit(BenchmarkKind::GHZ, 3));
  EXPECT_EQ(d.probs.size(), 2u);
  EXPECT_NEAR(d.at(0b000), 0.5, 1e-12);
  EXPECT_NEAR(d.at(0b111), 0.5, 1e-12);
}

TEST(Ideal, NoGatesAllZeros) {
  QuantumCircuit c(3);
  c.measure_all();
  const auto d = ideal_distribution(c);
  EXPECT_DOUBLE_EQ(d.at(0), 1.0);
}

TEST(Ideal, MatchesDenseUnitaryOracle) {
  std::vector<QuantumCircuit> corpus;
  for (std::uint64_t s = 0; s < 40; ++s) corpus.push_back(random_circuit(2 + s % 3, 8, s));
  corpus.push_back(benchmark_circuit(BenchmarkKind::QFT, 4));
  corpus.push_back(benchmark_circuit(BenchmarkKind::QPE, 4));
  corpus.push_back(benchmark_circuit(BenchmarkKind::Grover, 3));
  for (const auto& c : corpus) {
    const auto d = ideal_distribution(c);
    EXPECT_LE(tvd(d, from_map(c.num_clbits(), oracle::distribution(c))), 1e-12);
  }
}

TEST(Ideal, TooManyQubitsRejected) {
  QuantumCircuit c(15);
  for (int q = 0; q < 15; ++q) c.gate(GateKind::H, q);
  EXPECT_THROW(ideal_distribution(c), ContractError);
}

TEST(Statevector, NormPreservedAfterEveryGate) {
  const auto c = random_circuit(6, 30, 3);
  Statevector sv(6);
  for (const auto& g : c.instructions()) {
    sv.apply(g);
    EXPECT_NEAR(sv.norm(), 1.0, 1e-10);
  }
  for (int p = 0; p < 4; ++p) {
    sv.apply_pauli(2, p);
    EXPECT_NEAR(sv.norm(), 1.0, 1e-10);
  }
}

TEST(Noisy, DisabledMatchesIdealSampling) {
  const auto b = synthetic_backend(Topology::Line, 3, UniformNoise{});
  const auto ghz = benchmark_circuit(BenchmarkKind::GHZ, 3);
  const auto compiled = compile_basic(ghz, b);
  NoiseConfig cfg;
  cfg.enabled = false;
  cfg.shots = 8192;
  cfg.seed = 5;
  const auto d = noisy_distribution(compiled.circuit, b, compiled.layout, cfg);
  EXPECT_LE(tvd(d, ideal_distribution(ghz)), 0.05);
  EXPECT_NEAR(d.total(), 1.0, 1e-12);
}

TEST(Noisy, ZeroScaleIdenticalToNoiseOff) {
  const auto b = synthetic_backend(Topology::Line, 4, UniformNoise{});
  const auto compiled = compile_basic(random_circuit(4, 10, 2), b);
  NoiseConfig off;
  off.enabled = false;
  off.seed = 9;
  off.shots = 2000;
  NoiseConfig zero = off;
  zero.enabled = true;
  zero.noise_scale = 0.0;
  EXPECT_EQ(noisy_distribution(compiled.circuit, b, compiled.layout, off).probs,
            noisy_distribution(compiled.circuit, b, compiled.layout, zero).probs);
}

TEST(Noisy, SeededAndThreadIndependent) {
  const auto b = synthetic_backend(Topology::Ring, 5, HeterogeneousNoise{2, 0.5, {}});
  const auto compiled = compile_basic(random_circuit(5, 10, 8), b);
  NoiseConfig cfg;
  cfg.seed = 17;
  cfg.shots = 3000;
  setenv("PASSFORGE_THREADS", "1", 1);
  const auto a = noisy_distribution(compiled.circuit, b, compiled.layout, cfg);
  setenv("PASSFORGE_THREADS", "3", 1);
  const auto c = noisy_distribution(compiled.circuit, b, compiled.layout, cfg);
  unsetenv("PASSFORGE_THREADS");
  EXPECT_EQ(a.probs, c.probs);
  cfg.seed = 18;
  EXPECT_NE(noisy_distribution(compiled.circuit, b, compiled.layout, cfg).probs, a.probs);
}

TEST(Noisy, TvdNonDecreasingInNoiseScale) {
  const auto b = synthetic_backend(Topology::Line, 5, UniformNoise{});
  const auto ghz = benchmark_circuit(BenchmarkKind::GHZ, 5);
  const auto compiled = compile_basic(ghz, b);
  const auto ideal = ideal_distribution(ghz);
  std::vector<double> mean;
  for (double scale : {0.3, 0.5, 1.0}) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      NoiseConfig cfg;
      cfg.noise_scale = scale;
      cfg.seed = seed;
      cfg.shots = 4096;
      sum += tvd(ideal, noisy_distribution(compiled.circuit, b, compiled.layout, cfg));
    }
    mean.push_back(sum / 10);
  }
  EXPECT_LE(mean[0], mean[1]);
  EXPECT_LE(mean[1], mean[2]);
}

TEST(Noisy, RejectsUntranslatedAndUnplaced) {
  const auto b = synthetic_backend(Topology::Line, 3, UniformNoise{});
  const auto ghz = benchmark_circuit(BenchmarkKind::GHZ, 3);
  NoiseConfig cfg;
  EXPECT_THROW(noisy_distribution(ghz, b, Layout::from_mapping({0, 1, 2}), cfg), ContractError);
  const auto placed = apply_trivial_layout(ghz, b);
  EXPECT_THROW(noisy_distribution(placed.circuit, b, *placed.layout, cfg), ContractError);
  const auto compiled = compile_basic(ghz, b);
  EXPECT_THROW(noisy_distribution(compiled.circuit, b, Layout{}, cfg), ContractError);
}

TEST(Sampling, ExactCountsSumToOne) {
  const auto d = sample_distribution(Distribution{2, {{0, 0.25}, {3, 0.75}}}, 1000, 1);
  EXPECT_NEAR(d.total(), 1.0, 1e-12);
  EXPECT_NEAR(d.at(3), 0.75, 0.06);
}
