#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <queue>

#include "passforge/backend.hpp"
#include "passforge/error.hpp"

using namespace passforge;

namespace {

std::string fixture(const std::string& name) { return std::string(PASSFORGE_DATA_DIR) + "/backends/" + name; }

// Unit-weight Dijkstra (priority queue) over an explicit edge list.
std::vector<int> dijkstra(int n, const std::vector<Edge>& edges, int src) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> dist(n, 1 << 20);
  using Item = std::pair<int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0;
  pq.push({0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (int v : adj[u]) {
      if (d + 1 < dist[v]) {
        dist[v] = d + 1;
        pq.push({dist[v], v});
      }
    }
  }
  return dist;
}

nlohmann::json two_qubit_json() {
  return {{"num_qubits", 2},       {"edges", {{0, 1}}},        {"eps_2q", {{"0-1", 0.01}}},
          {"eps_1q", {1e-3, 1e-3}}, {"eps_readout", {0.02, 0.02}}, {"t1_us", {100, 100}},
          {"t2_us", {80, 80}}};
}

}  // namespace

TEST(Backend, BundledHeavyHexLoads) {
  const auto b = load_calibration(fixture("heavyhex_12.json"));
  EXPECT_EQ(b.num_physical(), 12);
  EXPECT_EQ(b.num_edges(), 13u);
  EXPECT_TRUE(is_connected(12, b.edges()));
  for (int q = 0; q < 12; ++q) EXPECT_LE(b.t2(q), 2 * b.t1(q));
}

TEST(Backend, RejectsT2AboveTwiceT1) {
  auto j = two_qubit_json();
  j["t2_us"] = {300, 80};
  EXPECT_THROW(backend_from_json(j), ValidationError);
}

TEST(Backend, RejectsDisconnected) {
  auto j = two_qubit_json();
  j["num_qubits"] = 4;
  j["edges"] = {{0, 1}, {2, 3}};
  j["eps_2q"] = {{"0-1", 0.01}, {"2-3", 0.01}};
  j["eps_1q"] = {1e-3, 1e-3, 1e-3, 1e-3};
  j["eps_readout"] = {0.02, 0.02, 0.02, 0.02};
  j["t1_us"] = {100, 100, 100, 100};
  j["t2_us"] = {80, 80, 80, 80};
  EXPECT_THROW(backend_from_json(j), ValidationError);
}

TEST(Backend, RejectsUnknownKey) {
  auto j = two_qubit_json();
  j["bogus"] = 1;
  EXPECT_THROW(backend_from_json(j), ValidationError);
}

TEST(Backend, JsonRoundTrip) {
  const auto b = synthetic_backend(Topology::Grid, 6, HeterogeneousNoise{5, 0.5, {}});
  const auto back = backend_from_json(backend_to_json(b));
  EXPECT_EQ(back.fingerprint(), b.fingerprint());
}

TEST(Topologies, LineEdges) {
  const auto b = synthetic_backend(Topology::Line, 4, UniformNoise{});
  EXPECT_EQ(b.edges(), (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}}));
}

TEST(Topologies, RingDegrees) {
  const auto b = synthetic_backend(Topology::Ring, 5, UniformNoise{});
  EXPECT_EQ(b.num_edges(), 5u);
  for (int q = 0; q < 5; ++q) EXPECT_EQ(b.neighbors(q).size(), 2u);
}

TEST(Topologies, HeterogeneousDeterministic) {
  const auto a = synthetic_backend(Topology::Ring, 8, HeterogeneousNoise{3, 0.5, {}});
  const auto b = synthetic_backend(Topology::Ring, 8, HeterogeneousNoise{3, 0.5, {}});
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  const auto c = synthetic_backend(Topology::Ring, 8, HeterogeneousNoise{4, 0.5, {}});
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(Perturb, Deterministic) {
  const auto b = load_calibration(fixture("heavyhex_12.json"));
  EXPECT_EQ(perturb(b, 9).fingerprint(), perturb(b, 9).fingerprint());
}

TEST(Perturb, MeanMultiplicativeShiftNearOne) {
  const auto b = synthetic_backend(Topology::HeavyHexFragment, 12, UniformNoise{});
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto p = perturb(b, s);
    for (int q = 0; q < 12; ++q) {
      sum += p.eps_1q(q) / b.eps_1q(q);
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_GE(mean, 0.95);
  EXPECT_LE(mean, 1.05);
}

TEST(Perturb, LineNeverLosesEdges) {
  const auto b = synthetic_backend(Topology::Line, 8, UniformNoise{});
  for (std::uint64_t s = 0; s < 200; ++s) EXPECT_EQ(perturb(b, s).num_edges(), b.num_edges());
}

TEST(Perturb, StaysConnectedAndValid) {
  const auto b = synthetic_backend(Topology::Grid, 9, UniformNoise{});
  bool removed_any = false;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto p = perturb(b, s);
    EXPECT_TRUE(is_connected(9, p.edges()));
    removed_any = removed_any || p.num_edges() < b.num_edges();
    for (int q = 0; q < 9; ++q) EXPECT_LE(p.t2(q), 2 * p.t1(q) + 1e-15);
  }
  EXPECT_TRUE(removed_any);
}

TEST(SwapDistance, Examples) {
  const auto b = synthetic_backend(Topology::Line, 4, UniformNoise{});
  EXPECT_EQ(swap_distance(b, 1, 2), 1);
  EXPECT_EQ(swap_distance(b, 0, 3), 3);
}

TEST(SwapDistance, MatchesDijkstraOnHeavyHex) {
  const auto b = synthetic_backend(Topology::HeavyHexFragment, 12, UniformNoise{});
  for (int s = 0; s < 12; ++s) {
    const auto d = dijkstra(12, b.edges(), s);
    for (int t = 0; t < 12; ++t) EXPECT_EQ(swap_distance(b, s, t), d[t]);
  }
}

TEST(ShortestPath, LexicographicallySmallest) {
  // Ring of 4: 0-1-2-3-0; both 0->1->2 and 0->3->2 are shortest.
  const auto b = synthetic_backend(Topology::Ring, 4, UniformNoise{});
  EXPECT_EQ(b.shortest_path(0, 2), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(b.shortest_path(2, 0), (std::vector<int>{2, 1, 0}));
}

TEST(Bridges, LineAllBridgesRingNone) {
  const auto line = topology_edges(Topology::Line, 5);
  for (bool b : bridge_edges(5, line)) EXPECT_TRUE(b);
  const auto ring = topology_edges(Topology::Ring, 5);
  for (bool b : bridge_edges(5, ring)) EXPECT_FALSE(b);
}
