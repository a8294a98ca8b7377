#include <gtest/gtest.h>

#include <sstream>

#include "passforge/baselines.hpp"
#include "passforge/error.hpp"
#include "passforge/generators.hpp"
#include "passforge/simulator.hpp"

using namespace passforge;

namespace {

BackendModel heavyhex() { return synthetic_backend(Topology::HeavyHexFragment, 12, HeterogeneousNoise{7, 0.5, {}}); }

std::vector<QuantumCircuit> corpus(int count, std::uint64_t seed0) {
  std::vector<QuantumCircuit> out;
  for (int i = 0; i < count; ++i) {
    const int n = 3 + i % 5;
    out.push_back(random_circuit(n, 2 * n + i % 7, seed0 + static_cast<std::uint64_t>(i)));
  }
  return out;
}

void expect_valid_and_equivalent(const QuantumCircuit& in, const CompileResult& r, const BackendModel& b) {
  EXPECT_TRUE(is_executable(r.circuit, b));
  EXPECT_LE(tvd(ideal_distribution(in), ideal_distribution(r.circuit)), 1e-9);
  EXPECT_NEAR(r.report.esp, esp(r.circuit, b, r.layout), 1e-15);
}

}  // namespace

TEST(FixedPipeline, OutputsValidAndEquivalent) {
  const auto b = heavyhex();
  for (const auto& c : corpus(12, 10)) {
    expect_valid_and_equivalent(c, fixed_pipeline(FixedPipeline::FidelityOptimized, c, b), b);
    expect_valid_and_equivalent(c, fixed_pipeline(FixedPipeline::TimeOptimized, c, b), b);
  }
}

TEST(FixedPipeline, TimeOptimizedIsFaster) {
  const auto b = heavyhex();
  for (const auto& c : corpus(10, 30)) {
    // Best of three to damp scheduler noise.
    double fo = 1e9, to = 1e9;
    for (int k = 0; k < 3; ++k) {
      fo = std::min(fo, fixed_pipeline(FixedPipeline::FidelityOptimized, c, b).compile_seconds);
      to = std::min(to, fixed_pipeline(FixedPipeline::TimeOptimized, c, b).compile_seconds);
    }
    EXPECT_LT(to, fo);
  }
}

TEST(FixedPipeline, FidelityBeatsTimeOnMostCircuits) {
  const auto b = heavyhex();
  int wins = 0;
  const auto cs = corpus(100, 1000);
  for (const auto& c : cs) {
    const double fo = fixed_pipeline(FixedPipeline::FidelityOptimized, c, b).report.esp;
    const double to = fixed_pipeline(FixedPipeline::TimeOptimized, c, b).report.esp;
    wins += fo >= to ? 1 : 0;
  }
  EXPECT_GE(wins, 80);
}

TEST(FixedPipeline, StageProxiesRecorded) {
  const auto r = fixed_pipeline(FixedPipeline::FidelityOptimized, random_circuit(5, 10, 1), heavyhex());
  EXPECT_TRUE(r.stage_proxy[0].has_value());
  EXPECT_TRUE(r.stage_proxy[1].has_value());
  EXPECT_TRUE(r.stage_proxy[2].has_value());
  EXPECT_FALSE(r.stage_proxy[3].has_value());
  ASSERT_TRUE(r.stage_proxy[5].has_value());
  EXPECT_DOUBLE_EQ(*r.stage_proxy[5], r.report.esp);
  EXPECT_EQ(std::count(r.trace.begin(), r.trace.end(), kSkipAction), kNumStages);
}

TEST(BruteForce, NoTogglesIsFidelityOptimized) {
  const auto b = heavyhex();
  const auto c = random_circuit(5, 12, 4);
  const auto bf = brute_force_selective(c, b, {});
  ASSERT_EQ(bf.rows.size(), 1u);
  const auto fo = fixed_pipeline(FixedPipeline::FidelityOptimized, c, b);
  EXPECT_EQ(bf.best().report.esp, fo.report.esp);
  EXPECT_EQ(bf.best().report.gate_counts, fo.report.gate_counts);
}

TEST(BruteForce, SupersetAndReproducibleRows) {
  const auto b = heavyhex();
  const auto toggles = default_toggles();
  for (const auto& c : corpus(4, 70)) {
    const auto bf = brute_force_selective(c, b, toggles);
    ASSERT_EQ(bf.rows.size(), 32u);
    const auto fo = fixed_pipeline(FixedPipeline::FidelityOptimized, c, b);
    EXPECT_EQ(bf.rows[bf.all_on()].report.esp, fo.report.esp);
    EXPECT_GE(bf.best().report.esp, fo.report.esp);
    for (const auto& row : bf.rows) EXPECT_LE(row.report.esp, bf.best().report.esp);
    // Row 5 (bits 0 and 2) rebuilt independently.
    std::vector<PassKind> disabled;
    for (std::size_t i = 0; i < toggles.size(); ++i) {
      if (!((5U >> i) & 1U)) disabled.push_back(pass_info(toggles[i]).kind);
    }
    EXPECT_EQ(fidelity_skeleton(c, b, disabled).report.esp, bf.rows[5].report.esp);
  }
}

TEST(BruteForce, RejectsBadToggles) {
  const auto b = heavyhex();
  const auto c = random_circuit(3, 6, 1);
  EXPECT_THROW(brute_force_selective(c, b, std::vector<PassId>{PassId::TranslateBasis}), ValidationError);
  EXPECT_THROW(brute_force_selective(c, b, std::vector<PassId>{PassId::InitRemoveIdentity, PassId::OptRemoveIdentity}),
               ValidationError);
  EXPECT_THROW(brute_force_selective(c, b, std::vector<PassId>(9, PassId::LayoutVf2)), ValidationError);
}

TEST(BruteForce, CsvHasOneRowPerConfig) {
  const auto bf = brute_force_selective(random_circuit(4, 8, 2), heavyhex(), default_toggles());
  std::stringstream ss;
  write_brute_force_csv(ss, bf);
  std::string line;
  int data = 0;
  bool header = false;
  while (std::getline(ss, line)) {
    if (line.starts_with("#")) continue;
    if (!header) {
      EXPECT_EQ(line, "config,esp,gates,depth,compile_ms");
      header = true;
      continue;
    }
    ++data;
  }
  EXPECT_EQ(data, 32);
}

TEST(SearchBaselines, RandomAndGreedyValid) {
  const auto b = heavyhex();
  for (const auto& c : corpus(8, 200)) {
    expect_valid_and_equivalent(c, random_select(c, b, 3), b);
    expect_valid_and_equivalent(c, greedy_select(c, b), b);
  }
}

TEST(SearchBaselines, GreedyDoesNotStallOnPendingFollowUps) {
  const auto b = heavyhex();
  for (int n : {4, 5, 6}) {
    const auto g = greedy_select(benchmark_circuit(BenchmarkKind::QFT, n), b);
    EXPECT_LT(g.trace.size(), 30u) << n;
    for (std::size_t i = 1; i < g.trace.size(); ++i) {
      if (g.trace[i] != kSkipAction) EXPECT_NE(g.trace[i], g.trace[i - 1]) << n << " step " << i;
    }
  }
}

TEST(SearchBaselines, RandomSelectIsSeeded) {
  const auto b = heavyhex();
  const auto c = random_circuit(5, 10, 8);
  EXPECT_EQ(random_select(c, b, 4).trace, random_select(c, b, 4).trace);
}

TEST(SearchBaselines, ReplayReproducesTrace) {
  const auto b = heavyhex();
  const auto c = random_circuit(5, 10, 8);
  const auto r = random_select(c, b, 9);
  const auto replayed = replay_actions(c, b, r.trace);
  EXPECT_EQ(replayed.trace, r.trace);
  EXPECT_EQ(replayed.circuit, r.circuit);
}

TEST(SearchBaselines, ReplayTransfersToLargerCircuit) {
  const auto b = heavyhex();
  const auto learned = greedy_select(benchmark_circuit(BenchmarkKind::QFT, 3), b).trace;
  const auto big = benchmark_circuit(BenchmarkKind::QFT, 6);
  expect_valid_and_equivalent(big, replay_actions(big, b, learned), b);
}

TEST(SearchBaselines, EvolutionStrategy) {
  const auto b = heavyhex();
  const auto c = random_circuit(6, 14, 5);
  const auto es = evolution_strategy(c, b, 20, 1);
  EXPECT_LE(es.evaluations, 20);
  EXPECT_GT(es.evaluations, 0);
  EXPECT_NE(es.method.find("stand-in"), std::string::npos);
  expect_valid_and_equivalent(c, es.best, b);
  // Best of the search is at least the all-on configuration, always evaluated first.
  EXPECT_GE(es.best.report.esp, fixed_pipeline(FixedPipeline::FidelityOptimized, c, b).report.esp);
  EXPECT_EQ(evolution_strategy(c, b, 20, 1).best_genome, es.best_genome);
  EXPECT_THROW(evolution_strategy(c, b, 0, 1), ValidationError);
}
