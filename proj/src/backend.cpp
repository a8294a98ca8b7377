#include "passforge/backend.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

double GateDurations::of(GateKind kind) const {
  if (kind == GateKind::MEASURE) return measure;
  return arity(kind) >= 2 ? twoq : oneq;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

std::vector<std::vector<int>> adjacency(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

bool is_connected(int num_nodes, const std::vector<Edge>& edges) {
  if (num_nodes <= 1) return true;
  const auto dist = bfs_distances(adjacency(num_nodes, edges), 0);
  return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

std::vector<bool> bridge_edges(int num_nodes, const std::vector<Edge>& edges) {
  std::vector<bool> bridge(edges.size(), false);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    std::vector<Edge> rest;
    rest.reserve(edges.size() - 1);
    for (std::size_t f = 0; f < edges.size(); ++f) {
      if (f != e) rest.push_back(edges[f]);
    }
    const auto dist = bfs_distances(adjacency(num_nodes, rest), edges[e].first);
    bridge[e] = dist[edges[e].second] < 0;
  }
  return bridge;
}

BackendModel BackendModel::create(Calibration cal, std::string name) {
  const int n = cal.num_qubits;
  require(n >= 1, "backend needs at least one qubit");
  require(cal.eps_2q.size() == cal.edges.size(), "eps_2q must have one entry per edge");
  for (const auto* v : {&cal.eps_1q, &cal.eps_readout, &cal.t1, &cal.t2}) {
    require(static_cast<int>(v->size()) == n, "per-qubit calibration arrays must have num_qubits entries");
  }
  std::set<Edge> seen;
  for (auto& [a, b] : cal.edges) {
    require(a >= 0 && b >= 0 && a < n && b < n, "edge endpoint out of range");
    require(a != b, "self-loop edge");
    if (a > b) std::swap(a, b);
    require(seen.insert({a, b}).second, "duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
  }
  auto check_prob = [](double p, const char* what) {
    require(std::isfinite(p) && p >= 0.0 && p <= kMaxErrorRate, std::string(what) + " must lie in [0, 0.5]");
  };
  for (double p : cal.eps_2q) check_prob(p, "eps_2q");
  for (double p : cal.eps_1q) check_prob(p, "eps_1q");
  for (double p : cal.eps_readout) check_prob(p, "eps_readout");
  for (int q = 0; q < n; ++q) {
    require(cal.t1[q] > 0 && cal.t2[q] > 0, "coherence times must be positive");
    require(cal.t2[q] <= 2 * cal.t1[q] * (1 + 1e-12),
            "t2 exceeds 2*t1 on qubit " + std::to_string(q));
  }
  require(cal.durations.oneq >= 0 && cal.durations.twoq >= 0 && cal.durations.measure >= 0,
          "gate durations must be non-negative");
  require(is_connected(n, cal.edges), "coupling graph is disconnected");

  BackendModel b;
  b.name_ = std::move(name);
  b.cal_ = std::move(cal);
  b.edge_of_.assign(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t e = 0; e < b.cal_.edges.size(); ++e) {
    const auto [x, y] = b.cal_.edges[e];
    b.edge_of_[x * n + y] = static_cast<int>(e);
    b.edge_of_[y * n + x] = static_cast<int>(e);
  }
  b.neighbors_ = adjacency(n, b.cal_.edges);
  b.dist_.assign(static_cast<std::size_t>(n) * n, 0);
  for (int s = 0; s < n; ++s) {
    const auto d = bfs_distances(b.neighbors_, s);
    std::copy(d.begin(), d.end(), b.dist_.begin() + static_cast<std::ptrdiff_t>(s) * n);
  }
  b.next_hop_.assign(static_cast<std::size_t>(n) * n, -1);
  for (int a = 0; a < n; ++a) {
    for (int t = 0; t < n; ++t) {
      if (a == t) continue;
      for (int v : b.neighbors_[a]) {  // sorted, so first hit is the smallest label
        if (b.distance(v, t) == b.distance(a, t) - 1) {
          b.next_hop_[a * n + t] = v;
          break;
        }
      }
    }
  }
  b.path_eps_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    for (int t = 0; t < n; ++t) {
      if (a == t) continue;
      double sum = 0.0;
      int hops = 0;
      for (int u = a; u != t; u = b.next_hop_[u * n + t]) {
        sum += b.cal_.eps_2q[b.edge_of_[u * n + b.next_hop_[u * n + t]]];
        ++hops;
      }
      b.path_eps_[a * n + t] = sum / hops;
    }
  }
  Fnv1a h;
  h.add(n);
  for (const auto& [x, y] : b.cal_.edges) {
    h.add(x);
    h.add(y);
  }
  // 12 significant digits, so unit conversions in the JSON schema do not
  // change the fingerprint.
  auto add_value = [&h](double x) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.12g", x);
    h.add(std::string_view(buf, static_cast<std::size_t>(len)));
  };
  for (const auto* v : {&b.cal_.eps_2q, &b.cal_.eps_1q, &b.cal_.eps_readout, &b.cal_.t1, &b.cal_.t2}) {
    for (double x : *v) add_value(x);
  }
  add_value(b.cal_.durations.oneq);
  add_value(b.cal_.durations.twoq);
  add_value(b.cal_.durations.measure);
  b.fingerprint_ = h.value();
  return b;
}

double BackendModel::eps_2q(int a, int b) const {
  const int e = edge_index(a, b);
  if (e < 0) throw ContractError("qubits " + std::to_string(a) + " and " + std::to_string(b) + " are not coupled");
  return cal_.eps_2q[e];
}

std::vector<int> BackendModel::shortest_path(int a, int b) const {
  std::vector<int> path{a};
  for (int u = a; u != b;) {
    u = next_hop_[u * num_physical() + b];
    path.push_back(u);
  }
  return path;
}

int swap_distance(const BackendModel& b, int i, int j) {
  if (i < 0 || j < 0 || i >= b.num_physical() || j >= b.num_physical()) {
    throw ContractError("swap_distance: qubit out of range");
  }
  return b.distance(i, j);
}

BackendModel backend_from_json(const nlohmann::json& j, std::string name) {
  static const std::set<std::string> kKeys = {"num_qubits", "edges",   "eps_2q",       "eps_1q", "eps_readout",
                                              "t1_us",      "t2_us",   "durations_ns", "name"};
  try {
    for (const auto& [key, _] : j.items()) {
      if (!kKeys.contains(key)) throw ValidationError("calibration schema: unknown key '" + key + "'");
    }
    Calibration cal;
    cal.num_qubits = j.at("num_qubits").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ValidationError("calibration schema: edges must be [i, j] pairs");
      cal.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    const auto& eps2 = j.at("eps_2q");
    if (!eps2.is_object()) throw ValidationError("calibration schema: eps_2q must be an object keyed \"i-j\"");
    std::vector<bool> filled(cal.edges.size(), false);
    cal.eps_2q.assign(cal.edges.size(), 0.0);
    for (const auto& [key, value] : eps2.items()) {
      const auto dash = key.find('-');
      if (dash == std::string::npos) throw ValidationError("calibration schema: bad eps_2q key '" + key + "'");
      int a = std::stoi(key.substr(0, dash));
      int b = std::stoi(key.substr(dash + 1));
      if (a > b) std::swap(a, b);
      bool matched = false;
      for (std::size_t e = 0; e < cal.edges.size(); ++e) {
        auto [x, y] = cal.edges[e];
        if (x > y) std::swap(x, y);
        if (x == a && y == b) {
          cal.eps_2q[e] = value.get<double>();
          filled[e] = true;
          matched = true;
        }
      }
      if (!matched) throw ValidationError("calibration schema: eps_2q entry '" + key + "' has no edge");
    }
    if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
      throw ValidationError("calibration schema: eps_2q missing for some edge");
    }
    cal.eps_1q = j.at("eps_1q").get<std::vector<double>>();
    cal.eps_readout = j.at("eps_readout").get<std::vector<double>>();
    for (double t : j.at("t1_us").get<std::vector<double>>()) cal.t1.push_back(t * 1e-6);
    for (double t : j.at("t2_us").get<std::vector<double>>()) cal.t2.push_back(t * 1e-6);
    if (j.contains("durations_ns")) {
      const auto& d = j.at("durations_ns");
      cal.durations.oneq = d.at("oneq").get<double>() * 1e-9;
      cal.durations.twoq = d.at("twoq").get<double>() * 1e-9;
      cal.durations.measure = d.at("measure").get<double>() * 1e-9;
    }
    if (j.contains("name")) name = j.at("name").get<std::string>();
    return BackendModel::create(std::move(cal), std::move(name));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("calibration schema: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ValidationError("calibration schema: non-numeric eps_2q key");
  }
}

nlohmann::json backend_to_json(const BackendModel& b) {
  const auto& cal = b.calibration();
  nlohmann::json edges = nlohmann::json::array();
  nlohmann::json eps2 = nlohmann::json::object();
  for (std::size_t e = 0; e < cal.edges.size(); ++e) {
    edges.push_back({cal.edges[e].first, cal.edges[e].second});
    eps2[std::to_string(cal.edges[e].first) + "-" + std::to_string(cal.edges[e].second)] = cal.eps_2q[e];
  }
  std::vector<double> t1_us;
  std::vector<double> t2_us;
  for (double t : cal.t1) t1_us.push_back(t * 1e6);
  for (double t : cal.t2) t2_us.push_back(t * 1e6);
  return {
      {"name", b.name()},
      {"num_qubits", cal.num_qubits},
      {"edges", edges},
      {"eps_2q", eps2},
      {"eps_1q", cal.eps_1q},
      {"eps_readout", cal.eps_readout},
      {"t1_us", t1_us},
      {"t2_us", t2_us},
      {"durations_ns",
       {{"oneq", cal.durations.oneq * 1e9}, {"twoq", cal.durations.twoq * 1e9}, {"measure", cal.durations.measure * 1e9}}},
  };
}

BackendModel load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open calibration file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("calibration schema: ") + e.what());
  }
  std::string stem = path.substr(path.find_last_of('/') + 1);
  return backend_from_json(j, stem.substr(0, stem.find('.')));
}

Topology topology_from_string(const std::string& name) {
  if (name == "line" || name == "Line") return Topology::Line;
  if (name == "ring" || name == "Ring") return Topology::Ring;
  if (name == "grid" || name == "Grid") return Topology::Grid;
  if (name == "heavyhex" || name == "HeavyHexFragment" || name == "heavy_hex") return Topology::HeavyHexFragment;
  throw ValidationError("unknown topology '" + name + "'");
}

std::vector<Edge> topology_edges(Topology kind, int n) {
  std::vector<Edge> edges;
  switch (kind) {
    case Topology::Line:
      require(n >= 2, "Line needs n >= 2");
      for (int q = 0; q + 1 < n; ++q) edges.emplace_back(q, q + 1);
      break;
    case Topology::Ring:
      require(n >= 3, "Ring needs n >= 3");
      for (int q = 0; q + 1 < n; ++q) edges.emplace_back(q, q + 1);
      edges.emplace_back(0, n - 1);
      break;
    case Topology::Grid: {
      int rows = 1;
      for (int r = 2; r * r <= n; ++r) {
        if (n % r == 0) rows = r;
      }
      require(rows >= 2, "Grid needs n = rows*cols with rows, cols >= 2");
      const int cols = n / rows;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const int q = r * cols + c;
          if (c + 1 < cols) edges.emplace_back(q, q + 1);
          if (r + 1 < rows) edges.emplace_back(q, q + cols);
        }
      }
      break;
    }
    case Topology::HeavyHexFragment:
      // A 12-qubit ring with one cross link (max degree 3, 13 couplers);
      // extra qubits hang off qubit 3 as a tail.
      require(n >= 12 && n <= 20, "HeavyHexFragment supports n in [12, 20]");
      for (int q = 0; q < 11; ++q) edges.emplace_back(q, q + 1);
      edges.emplace_back(0, 11);
      edges.emplace_back(0, 6);
      for (int q = 12; q < n; ++q) edges.emplace_back(q == 12 ? 3 : q - 1, q);
      break;
  }
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

namespace {

std::string topology_name(Topology kind) {
  switch (kind) {
    case Topology::Line: return "line";
    case Topology::Ring: return "ring";
    case Topology::Grid: return "grid";
    case Topology::HeavyHexFragment: return "heavyhex";
  }
  return "?";
}

}  // namespace

BackendModel synthetic_backend(Topology kind, int n, const NoiseProfile& noise) {
  Calibration cal;
  cal.num_qubits = n;
  cal.edges = topology_edges(kind, n);
  std::string name = topology_name(kind) + "_" + std::to_string(n);
  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    cal.eps_2q.assign(cal.edges.size(), u->eps_2q);
    cal.eps_1q.assign(n, u->eps_1q);
    cal.eps_readout.assign(n, u->eps_readout);
    cal.t1.assign(n, u->t1);
    cal.t2.assign(n, std::min(u->t2, 2 * u->t1));
  } else {
    const auto& h = std::get<HeterogeneousNoise>(noise);
    std::mt19937_64 rng(h.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto jitter = [&](double base, double lo, double hi) {
      return std::clamp(base * std::exp(h.spread * normal(rng)), lo, hi);
    };
    for (std::size_t e = 0; e < cal.edges.size(); ++e) {
      cal.eps_2q.push_back(jitter(h.base.eps_2q, kMinErrorRate, kMaxErrorRate));
    }
    for (int q = 0; q < n; ++q) {
      cal.eps_1q.push_back(jitter(h.base.eps_1q, kMinErrorRate, kMaxErrorRate));
      cal.eps_readout.push_back(jitter(h.base.eps_readout, kMinErrorRate, kMaxErrorRate));
      const double t1 = jitter(h.base.t1, kMinCoherence, kMaxCoherence);
      cal.t1.push_back(t1);
      cal.t2.push_back(std::min(jitter(h.base.t2, kMinCoherence, kMaxCoherence), 2 * t1));
    }
    name += "_het" + std::to_string(h.seed);
  }
  return BackendModel::create(std::move(cal), std::move(name));
}

BackendModel perturb(const BackendModel& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> err_noise(0.0, 0.2);
  std::normal_distribution<double> coh_noise(0.0, 0.1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Calibration cal = b.calibration();
  auto scale_err = [&](double& p) { p = std::clamp(p * (1.0 + err_noise(rng)), kMinErrorRate, kMaxErrorRate); };
  for (double& p : cal.eps_2q) scale_err(p);
  for (double& p : cal.eps_1q) scale_err(p);
  for (double& p : cal.eps_readout) scale_err(p);
  for (int q = 0; q < cal.num_qubits; ++q) {
    cal.t1[q] = std::clamp(cal.t1[q] * (1.0 + coh_noise(rng)), kMinCoherence, kMaxCoherence);
    cal.t2[q] = std::clamp(cal.t2[q] * (1.0 + coh_noise(rng)), kMinCoherence, kMaxCoherence);
    cal.t2[q] = std::min(cal.t2[q], 2 * cal.t1[q]);
  }
  // Edges are considered one at a time against the current graph, so a
  // removal never strands a component even when two cycle edges are drawn.
  std::vector<Edge> edges = cal.edges;
  std::vector<double> eps = cal.eps_2q;
  for (std::size_t e = 0; e < edges.size();) {
    if (unit(rng) >= 0.05) {
      ++e;
      continue;
    }
    std::vector<Edge> without = edges;
    without.erase(without.begin() + static_cast<std::ptrdiff_t>(e));
    if (is_connected(cal.num_qubits, without)) {
      edges = std::move(without);
      eps.erase(eps.begin() + static_cast<std::ptrdiff_t>(e));
    } else {
      ++e;
    }
  }
  cal.edges = std::move(edges);
  cal.eps_2q = std::move(eps);
  return BackendModel::create(std::move(cal), b.name() + "_p" + std::to_string(seed));
}

}  // namespace passforge
