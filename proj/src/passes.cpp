#include "passforge/passes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "passforge/metrics.hpp"
#include "passforge/unitary.hpp"

namespace passforge {

// ---------------------------------------------------------------------------
// Catalog

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Init: return "init";
    case Stage::Layout: return "layout";
    case Stage::Routing: return "routing";
    case Stage::Translate: return "translate";
    case Stage::Optimize: return "optimize";
    case Stage::Cleanup: return "cleanup";
  }
  return "?";
}

std::string_view pass_kind_name(PassKind k) {
  switch (k) {
    case PassKind::Unroll3q: return "Unroll3qOrMore";
    case PassKind::RemoveIdentityEquivalent: return "RemoveIdentityEquivalent";
    case PassKind::CommutativeCancellation: return "CommutativeCancellation";
    case PassKind::InverseCancellation: return "InverseCancellation";
    case PassKind::ContractIdleWires: return "ContractIdleWires";
    case PassKind::TrivialLayout: return "TrivialLayout";
    case PassKind::DenseLayout: return "DenseLayout";
    case PassKind::Vf2Layout: return "VF2Layout";
    case PassKind::NoiseAwareLayout: return "NoiseAwareLayout";
    case PassKind::BasicSwap: return "BasicSwap";
    case PassKind::SabreSwap: return "SabreSwap";
    case PassKind::LookaheadSwap: return "LookaheadSwap";
    case PassKind::Vf2PostLayout: return "VF2PostLayout";
    case PassKind::BasisTranslation: return "BasisTranslator";
    case PassKind::Optimize1qChains: return "Optimize1qGatesDecomposition";
  }
  return "?";
}

const std::vector<PassInfo>& pass_catalog() {
  using enum PassId;
  static const std::vector<PassId> any_layout{LayoutTrivial, LayoutDense, LayoutVf2, LayoutNoiseAware};
  static const std::vector<PassId> any_routing{RouteBasicSwap, RouteSabre, RouteLookahead};
  static const std::vector<PassInfo> catalog = {
      {InitUnroll3q, "init_unroll_3q", Stage::Init, PassKind::Unroll3q, true, {}, {}},
      {InitRemoveIdentity, "init_remove_identity", Stage::Init, PassKind::RemoveIdentityEquivalent, false, {}, {}},
      {InitCommutativeCancellation, "init_commutative_cancellation", Stage::Init, PassKind::CommutativeCancellation,
       false, {}, {InitRemoveIdentity}},
      {InitInverseCancellation, "init_inverse_cancellation", Stage::Init, PassKind::InverseCancellation, false, {}, {}},
      {InitContractIdleWires, "init_contract_idle_wires", Stage::Init, PassKind::ContractIdleWires, false, {}, {}},
      {LayoutTrivial, "layout_trivial", Stage::Layout, PassKind::TrivialLayout, false, {}, {}},
      {LayoutDense, "layout_dense", Stage::Layout, PassKind::DenseLayout, false, {}, {}},
      {LayoutVf2, "layout_vf2", Stage::Layout, PassKind::Vf2Layout, false, {}, {}},
      {LayoutNoiseAware, "layout_noise_aware", Stage::Layout, PassKind::NoiseAwareLayout, false, {}, {}},
      {RouteBasicSwap, "route_basic_swap", Stage::Routing, PassKind::BasicSwap, false, any_layout, {}},
      {RouteSabre, "route_sabre", Stage::Routing, PassKind::SabreSwap, false, any_layout, {}},
      {RouteLookahead, "route_lookahead", Stage::Routing, PassKind::LookaheadSwap, false, any_layout, {}},
      {RouteVf2PostLayout, "route_vf2_post_layout", Stage::Routing, PassKind::Vf2PostLayout, false, any_routing, {}},
      {TranslateBasis, "translate_basis", Stage::Translate, PassKind::BasisTranslation, true, any_routing, {}},
      {OptRemoveIdentity, "opt_remove_identity", Stage::Optimize, PassKind::RemoveIdentityEquivalent, false,
       {TranslateBasis}, {}},
      {OptCommutativeCancellation, "opt_commutative_cancellation", Stage::Optimize,
       PassKind::CommutativeCancellation, false, {TranslateBasis}, {OptRemoveIdentity}},
      {OptOptimize1q, "opt_optimize_1q", Stage::Optimize, PassKind::Optimize1qChains, false, {TranslateBasis}, {}},
      {OptContractIdleWires, "opt_contract_idle_wires", Stage::Optimize, PassKind::ContractIdleWires, false,
       {TranslateBasis}, {}},
      {CleanupOptimize1q, "cleanup_optimize_1q", Stage::Cleanup, PassKind::Optimize1qChains, false, {TranslateBasis},
       {}},
      {CleanupCommutativeCancellation, "cleanup_commutative_cancellation", Stage::Cleanup,
       PassKind::CommutativeCancellation, false, {TranslateBasis}, {CleanupRemoveIdentity}},
      {CleanupRemoveIdentity, "cleanup_remove_identity", Stage::Cleanup, PassKind::RemoveIdentityEquivalent, false,
       {TranslateBasis}, {}},
      {CleanupVf2PostLayout, "cleanup_vf2_post_layout", Stage::Cleanup, PassKind::Vf2PostLayout, false,
       {TranslateBasis}, {}},
  };
  return catalog;
}

const PassInfo& pass_info(PassId id) { return pass_catalog()[static_cast<std::size_t>(id)]; }

std::optional<PassId> pass_from_name(std::string_view name) {
  for (const auto& p : pass_catalog()) {
    if (p.name == name) return p.id;
  }
  return std::nullopt;
}

nlohmann::json catalog_json() {
  auto names = [](const std::vector<PassId>& ids) {
    nlohmann::json a = nlohmann::json::array();
    for (PassId id : ids) a.push_back(pass_info(id).name);
    return a;
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pass_catalog()) {
    out.push_back({{"id", static_cast<int>(p.id)},
                   {"name", p.name},
                   {"stage", stage_name(p.stage)},
                   {"kind", pass_kind_name(p.kind)},
                   {"mandatory", p.mandatory},
                   {"prerequisites", names(p.prerequisites)},
                   {"follow_ups", names(p.follow_ups)}});
  }
  return out;
}

Deadline Deadline::after(double seconds) {
  Deadline d;
  if (seconds > 0.0) {
    d.end_ = std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
  }
  return d;
}

bool Deadline::expired() const { return end_ && std::chrono::steady_clock::now() >= *end_; }

std::size_t count_swaps(const QuantumCircuit& c) {
  return static_cast<std::size_t>(std::count_if(c.instructions().begin(), c.instructions().end(),
                                                [](const Instruction& i) { return i.kind == GateKind::SWAP; }));
}

namespace {

using std::numbers::pi;

PassOutcome unchanged(const QuantumCircuit& c, const std::optional<Layout>& layout = std::nullopt) {
  PassOutcome o;
  o.circuit = c;
  o.layout = layout;
  return o;
}

PassOutcome failure(const QuantumCircuit& c, std::string reason, const std::optional<Layout>& layout = std::nullopt) {
  PassOutcome o = unchanged(c, layout);
  o.failed = true;
  o.failure_reason = std::move(reason);
  return o;
}

PassOutcome transformed(const QuantumCircuit& in, QuantumCircuit out, const std::optional<Layout>& layout = std::nullopt) {
  PassOutcome o;
  o.changed = !(out == in);
  o.circuit = std::move(out);
  o.layout = layout;
  return o;
}

std::vector<Instruction> kept(const std::vector<Instruction>& gates, const std::vector<bool>& removed) {
  std::vector<Instruction> out;
  out.reserve(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (!removed[i]) out.push_back(gates[i]);
  }
  return out;
}

bool is_zero_angle(double a) { return std::abs(wrap_angle(a)) < kIdentityAngleTolerance; }

// Per-wire basis in which a gate acts diagonally, used for commutation.
enum class Role { Any, Z, X, Other };

Role role_on(const Instruction& g, int wire) {
  switch (g.kind) {
    case GateKind::I: return Role::Any;
    case GateKind::RZ:
    case GateKind::S:
    case GateKind::T:
    case GateKind::CZ: return Role::Z;
    case GateKind::X:
    case GateKind::SX: return Role::X;
    case GateKind::CX: return g.qubits[0] == wire ? Role::Z : Role::X;
    default: return Role::Other;
  }
}

bool roles_commute(Role a, Role b) { return a == Role::Any || b == Role::Any || (a == b && a != Role::Other); }

bool gates_commute(const Instruction& a, const Instruction& b) {
  for (int q : a.operands()) {
    if (b.acts_on(q) && !roles_commute(role_on(a, q), role_on(b, q))) return false;
  }
  return true;
}

bool same_operand_set(const Instruction& a, const Instruction& b) {
  if (a.arity() != b.arity()) return false;
  for (int q : a.operands()) {
    if (!b.acts_on(q)) return false;
  }
  return true;
}

bool self_inverse_pair(const Instruction& a, const Instruction& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case GateKind::X:
    case GateKind::H: return a.qubits[0] == b.qubits[0];
    case GateKind::CX: return a.qubits[0] == b.qubits[0] && a.qubits[1] == b.qubits[1];
    case GateKind::CZ:
    case GateKind::SWAP: return same_operand_set(a, b);
    default: return false;
  }
}

bool inverse_pair(const Instruction& a, const Instruction& b) {
  if (a.kind == GateKind::RZ && b.kind == GateKind::RZ) {
    return a.qubits[0] == b.qubits[0] && is_zero_angle(a.angle + b.angle);
  }
  return self_inverse_pair(a, b);
}

std::vector<std::vector<std::size_t>> wire_sequences(const std::vector<Instruction>& gates, int num_qubits) {
  std::vector<std::vector<std::size_t>> seq(num_qubits);
  for (std::size_t i = 0; i < gates.size(); ++i) {
    for (int q : gates[i].operands()) seq[q].push_back(i);
  }
  return seq;
}

// Symmetric weighted interaction graph of a circuit's 2q gates.
struct Interactions {
  std::map<Edge, int> weight;
  std::vector<int> degree;  // weighted
  std::vector<int> oneq;
  std::vector<int> measures;
};

Interactions interactions(const QuantumCircuit& c) {
  Interactions in;
  in.degree.assign(c.num_qubits(), 0);
  in.oneq.assign(c.num_qubits(), 0);
  in.measures.assign(c.num_qubits(), 0);
  for (const auto& g : c.instructions()) {
    if (g.arity() == 2) {
      const Edge e{std::min(g.qubits[0], g.qubits[1]), std::max(g.qubits[0], g.qubits[1])};
      ++in.weight[e];
      ++in.degree[e.first];
      ++in.degree[e.second];
    } else if (g.kind == GateKind::MEASURE) {
      ++in.measures[g.qubits[0]];
    } else if (g.arity() == 1) {
      ++in.oneq[g.qubits[0]];
    }
  }
  return in;
}

double mean_duration(const QuantumCircuit& c, const BackendModel& b) {
  if (c.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : c.instructions()) total += b.durations().of(g.kind);
  return total / static_cast<double>(c.size());
}

// Log of the layout/routing success estimate for a placement where every
// interacting pair lands on a coupling edge. `active` marks the pattern
// nodes that count for coherence averaging.
class PlacementScore {
 public:
  PlacementScore(const Interactions& in, std::map<Edge, double> pair_cost, const std::vector<bool>& active, int d,
                 double t_g)
      : in_(in), pair_cost_(std::move(pair_cost)), active_(active), d_(d), t_g_(t_g) {}

  double operator()(const BackendModel& b, const std::vector<int>& map) const {
    double s = 0.0;
    for (const auto& [e, cost] : pair_cost_) {
      const int edge = b.edge_index(map[e.first], map[e.second]);
      if (edge < 0) return -std::numeric_limits<double>::infinity();
      s += cost * std::log1p(-b.eps_2q(edge));
    }
    double t1 = 0.0;
    double t2 = 0.0;
    int n = 0;
    for (std::size_t q = 0; q < map.size(); ++q) {
      s += in_.oneq[q] * std::log1p(-b.eps_1q(map[q])) + in_.measures[q] * std::log1p(-b.eps_readout(map[q]));
      if (active_[q]) {
        t1 += b.t1(map[q]);
        t2 += b.t2(map[q]);
        ++n;
      }
    }
    if (n > 0 && d_ > 0) s -= d_ * t_g_ * (n / t1 + n / t2);
    return s;
  }

 private:
  const Interactions& in_;
  std::map<Edge, double> pair_cost_;
  std::vector<bool> active_;
  int d_;
  double t_g_;
};

PassOutcome place(const QuantumCircuit& c, const BackendModel& b, const std::vector<int>& mapping) {
  const QuantumCircuit placed = c.relabeled(mapping, b.num_physical(), QubitSpace::Physical);
  return transformed(c, placed, Layout::from_mapping(mapping));
}

std::optional<std::string> layout_precheck(const QuantumCircuit& c, const BackendModel& b) {
  if (c.qubit_space() != QubitSpace::Logical) return "circuit already placed";
  if (c.num_qubits() > b.num_physical()) return "circuit wider than backend";
  if (has_three_qubit_gates(c)) return "three-qubit gate present";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Routing machinery shared by the three SWAP routers.

class Router {
 public:
  Router(const QuantumCircuit& c, const BackendModel& b, const Layout& layout)
      : c_(c), b_(b), layout_(layout), phys_of_(b.num_physical()), virt_at_(b.num_physical()) {
    for (int p = 0; p < b.num_physical(); ++p) {
      phys_of_[p] = p;
      virt_at_[p] = p;
    }
  }

  const std::vector<int>& phys_of() const { return phys_of_; }
  std::vector<int>& mutable_phys_of() { return phys_of_; }

  void emit(Instruction g) {
    if (g.kind == GateKind::MEASURE) {
      deferred_.push_back(g);
      return;
    }
    for (int i = 0; i < g.arity(); ++i) g.qubits[i] = phys_of_[g.qubits[i]];
    out_.push_back(g);
  }

  void swap_physical(int p, int q) {
    out_.push_back(make_gate(GateKind::SWAP, std::min(p, q), std::max(p, q)));
    std::swap(virt_at_[p], virt_at_[q]);
    phys_of_[virt_at_[p]] = p;
    phys_of_[virt_at_[q]] = q;
  }

  bool executable(const Instruction& g) const {
    return g.arity() != 2 || b_.adjacent(phys_of_[g.qubits[0]], phys_of_[g.qubits[1]]);
  }

  // Moves the first operand along the lexicographically smallest shortest path.
  void route_basic(const Instruction& g) {
    const int pa = phys_of_[g.qubits[0]];
    const int pb = phys_of_[g.qubits[1]];
    if (b_.distance(pa, pb) <= 1) return;
    const auto path = b_.shortest_path(pa, pb);
    for (std::size_t k = 0; k + 2 < path.size(); ++k) swap_physical(path[k], path[k + 1]);
  }

  PassOutcome finish() {
    for (Instruction g : deferred_) {
      g.qubits[0] = phys_of_[g.qubits[0]];
      out_.push_back(g);
    }
    Layout out_layout = layout_;
    for (auto& p : out_layout.final) p = phys_of_[p];
    return transformed(c_, c_.with_instructions(std::move(out_)), out_layout);
  }

 private:
  const QuantumCircuit& c_;
  const BackendModel& b_;
  const Layout& layout_;
  std::vector<int> phys_of_;
  std::vector<int> virt_at_;
  std::vector<Instruction> out_;
  std::vector<Instruction> deferred_;
};

std::optional<std::string> routing_precheck(const QuantumCircuit& c, const BackendModel& b, const Layout& layout) {
  if (c.qubit_space() != QubitSpace::Physical) return "circuit not placed";
  if (c.num_qubits() != b.num_physical()) return "circuit width differs from backend";
  if (!layout.valid_for(b.num_physical())) return "layout invalid for backend";
  if (has_three_qubit_gates(c)) return "three-qubit gate present";
  return std::nullopt;
}

// Dependency graph over non-measurement instructions.
struct GateDag {
  std::vector<std::size_t> nodes;  // instruction indices
  std::vector<std::vector<int>> succs;
  std::vector<int> pending;  // unresolved predecessor count

  explicit GateDag(const QuantumCircuit& c) {
    const auto& gates = c.instructions();
    std::vector<int> last(c.num_qubits(), -1);
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (gates[i].kind == GateKind::MEASURE) continue;
      const int n = static_cast<int>(nodes.size());
      nodes.push_back(i);
      succs.emplace_back();
      pending.push_back(0);
      std::set<int> preds;
      for (int q : gates[i].operands()) {
        if (last[q] >= 0) preds.insert(last[q]);
        last[q] = n;
      }
      for (int p : preds) {
        succs[p].push_back(n);
        ++pending[n];
      }
    }
  }
};

class FrontierRouter {
 public:
  FrontierRouter(const QuantumCircuit& c, const BackendModel& b, const Layout& layout, const Deadline& deadline)
      : c_(c), b_(b), router_(c, b, layout), dag_(c), deadline_(deadline) {
    for (std::size_t n = 0; n < dag_.nodes.size(); ++n) {
      if (dag_.pending[n] == 0) front_.insert(static_cast<int>(n));
    }
    for (const auto& g : c.instructions()) {
      if (g.kind == GateKind::MEASURE) router_.emit(g);  // deferred to the end
    }
  }

  // Executes everything currently executable; returns true if anything ran.
  bool drain() {
    bool any = false;
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto it = front_.begin(); it != front_.end();) {
        const Instruction& g = gate(*it);
        if (!router_.executable(g)) {
          ++it;
          continue;
        }
        deadline_.check();
        router_.emit(g);
        const int n = *it;
        it = front_.erase(it);
        for (int s : dag_.succs[n]) {
          if (--dag_.pending[s] == 0) front_.insert(s);
        }
        progress = any = true;
      }
    }
    return any;
  }

  bool done() const { return front_.empty(); }

  std::vector<int> front_two_qubit() const {
    std::vector<int> out;
    for (int n : front_) {
      if (gate(n).arity() == 2) out.push_back(n);
    }
    return out;
  }

  // Up to `limit` two-qubit gates following the frontier.
  std::vector<int> extended_set(std::size_t limit = 20) const {
    std::vector<int> out;
    std::set<int> seen(front_.begin(), front_.end());
    std::vector<int> queue(front_.begin(), front_.end());
    for (std::size_t head = 0; head < queue.size() && out.size() < limit; ++head) {
      for (int s : dag_.succs[queue[head]]) {
        if (!seen.insert(s).second) continue;
        queue.push_back(s);
        if (gate(s).arity() == 2) {
          out.push_back(s);
          if (out.size() >= limit) break;
        }
      }
    }
    return out;
  }

  std::vector<Edge> candidate_swaps(const std::vector<int>& front2q, const std::vector<int>& phys_of) const {
    std::set<Edge> cands;
    for (int n : front2q) {
      for (int v : gate(n).operands()) {
        const int p = phys_of[v];
        for (int nb : b_.neighbors(p)) cands.insert({std::min(p, nb), std::max(p, nb)});
      }
    }
    return {cands.begin(), cands.end()};
  }

  double summed_distance(const std::vector<int>& nodes, const std::vector<int>& phys_of, int offset) const {
    double s = 0.0;
    for (int n : nodes) {
      const auto& g = gate(n);
      s += b_.distance(phys_of[g.qubits[0]], phys_of[g.qubits[1]]) - offset;
    }
    return s;
  }

  const Instruction& gate(int n) const { return c_.instructions()[dag_.nodes[n]]; }
  Router& router() { return router_; }
  const Deadline& deadline() const { return deadline_; }

 private:
  const QuantumCircuit& c_;
  const BackendModel& b_;
  Router router_;
  GateDag dag_;
  std::set<int> front_;
  const Deadline& deadline_;
};

void apply_swap_to(std::vector<int>& phys_of, const Edge& e) {
  for (auto& p : phys_of) {
    if (p == e.first) {
      p = e.second;
    } else if (p == e.second) {
      p = e.first;
    }
  }
}

// ---------------------------------------------------------------------------
// One-qubit resynthesis

Mat2 run_matrix(const std::vector<Instruction>& gates, const std::vector<std::size_t>& run) {
  Mat2 u = Mat2::identity();
  for (std::size_t i : run) u = one_qubit_matrix(gates[i].kind, gates[i].angle) * u;
  return u;
}

std::vector<Instruction> strip_zero_rz(std::vector<Instruction> seq) {
  std::erase_if(seq, [](const Instruction& g) { return g.kind == GateKind::RZ && is_zero_angle(g.angle); });
  return seq;
}

std::vector<Instruction> resynthesize(const Mat2& u, int q) {
  const EulerZyz e = euler_zyz(u);
  auto rz = [q](double a) { return make_rz(wrap_angle(a), q); };
  const Instruction sx = make_gate(GateKind::SX, q);
  const std::vector<std::vector<Instruction>> candidates = {
      {},
      strip_zero_rz({rz(e.phi + e.lambda)}),
      strip_zero_rz({rz(e.lambda - e.phi + pi), make_gate(GateKind::X, q)}),
      strip_zero_rz({rz(e.lambda - pi / 2), sx, rz(e.phi + pi / 2)}),
      strip_zero_rz({rz(e.lambda), sx, rz(e.theta + pi), sx, rz(e.phi + pi)}),
  };
  const std::vector<Instruction>* best = nullptr;
  for (const auto& cand : candidates) {
    Mat2 v = Mat2::identity();
    for (const auto& g : cand) v = one_qubit_matrix(g.kind, g.angle) * v;
    if (!equal_up_to_phase(v, u, 1e-9)) continue;
    if (best == nullptr || cand.size() < best->size()) best = &cand;
  }
  return best != nullptr ? *best : std::vector<Instruction>{};
}

bool resynthesizable(GateKind k) { return k == GateKind::RZ || k == GateKind::SX || k == GateKind::X; }

}  // namespace

// ---------------------------------------------------------------------------
// Init-stage passes

PassOutcome apply_unroll_3q(const QuantumCircuit& c) {
  if (!has_three_qubit_gates(c)) return unchanged(c);
  std::vector<Instruction> out;
  for (const auto& g : c.instructions()) {
    if (g.kind != GateKind::CCX) {
      out.push_back(g);
      continue;
    }
    const int a = g.qubits[0];
    const int b = g.qubits[1];
    const int t = g.qubits[2];
    const auto tdg = [](int q) { return make_rz(-pi / 4, q); };
    const auto tg = [](int q) { return make_gate(GateKind::T, q); };
    const auto cx = [](int x, int y) { return make_gate(GateKind::CX, x, y); };
    const auto h = [](int q) { return make_gate(GateKind::H, q); };
    for (const auto& d : {h(t), cx(b, t), tdg(t), cx(a, t), tg(t), cx(b, t), tdg(t), cx(a, t), tg(b), tg(t), h(t),
                          cx(a, b), tg(a), tdg(b), cx(a, b)}) {
      out.push_back(d);
    }
  }
  return transformed(c, c.with_instructions(std::move(out)));
}

PassOutcome apply_remove_identity_equivalent(const QuantumCircuit& c) {
  std::vector<Instruction> out;
  out.reserve(c.size());
  for (const auto& g : c.instructions()) {
    if (g.kind == GateKind::I) continue;
    if (g.kind == GateKind::RZ && is_zero_angle(g.angle)) continue;
    out.push_back(g);
  }
  if (out.size() == c.size()) return unchanged(c);
  return transformed(c, c.with_instructions(std::move(out)));
}

PassOutcome apply_commutative_cancellation(const QuantumCircuit& c, const Deadline& deadline) {
  std::vector<Instruction> gates = c.instructions();
  std::vector<bool> removed(gates.size(), false);
  const auto seq = wire_sequences(gates, c.num_qubits());
  // First later gate on `wire` that does not commute with gate i (or the
  // next RZ when merging rotations).
  auto blocker = [&](std::size_t i, int wire) -> long {
    const auto& ws = seq[wire];
    for (auto it = std::upper_bound(ws.begin(), ws.end(), i); it != ws.end(); ++it) {
      if (removed[*it]) continue;
      if (self_inverse_pair(gates[i], gates[*it])) return static_cast<long>(*it);
      if (!gates_commute(gates[i], gates[*it])) return static_cast<long>(*it);
      if (gates[i].kind == GateKind::RZ && gates[*it].kind == GateKind::RZ) return static_cast<long>(*it);
    }
    return -1;
  };

  bool any = false;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (removed[i]) continue;
      deadline.check();
      const Instruction& g = gates[i];
      if (g.kind == GateKind::RZ) {
        const long j = blocker(i, g.qubits[0]);
        if (j >= 0 && gates[j].kind == GateKind::RZ) {
          gates[j].angle = wrap_angle(gates[j].angle + g.angle);
          removed[i] = true;
          progress = any = true;
        }
        continue;
      }
      if (g.kind != GateKind::X && g.kind != GateKind::H && g.kind != GateKind::CX && g.kind != GateKind::CZ) continue;
      long target = -2;
      for (int q : g.operands()) {
        const long j = blocker(i, q);
        if (j < 0 || (target != -2 && j != target)) {
          target = -1;
          break;
        }
        target = j;
      }
      if (target >= 0 && self_inverse_pair(g, gates[target])) {
        removed[i] = true;
        removed[target] = true;
        progress = any = true;
      }
    }
  }
  if (!any) return unchanged(c);
  return transformed(c, c.with_instructions(kept(gates, removed)));
}

PassOutcome apply_inverse_cancellation(const QuantumCircuit& c) {
  const auto& gates = c.instructions();
  std::vector<bool> removed(gates.size(), false);
  std::vector<std::vector<std::size_t>> stack(c.num_qubits());
  bool any = false;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const Instruction& g = gates[i];
    const auto ops = g.operands();
    bool cancel = g.kind != GateKind::MEASURE && !stack[ops[0]].empty();
    const std::size_t j = cancel ? stack[ops[0]].back() : 0;
    for (int q : ops) {
      if (!cancel) break;
      cancel = !stack[q].empty() && stack[q].back() == j;
    }
    if (cancel && same_operand_set(gates[j], g) && inverse_pair(gates[j], g)) {
      removed[i] = removed[j] = true;
      for (int q : ops) stack[q].pop_back();
      any = true;
      continue;
    }
    for (int q : ops) stack[q].push_back(i);
  }
  if (!any) return unchanged(c);
  return transformed(c, c.with_instructions(kept(gates, removed)));
}

PassOutcome apply_contract_idle_wires(const QuantumCircuit& c, const std::optional<Layout>& layout) {
  const auto touched = touched_qubits(c);
  if (c.qubit_space() == QubitSpace::Logical) {
    std::vector<int> mapping(c.num_qubits(), -1);
    int next = 0;
    for (int q = 0; q < c.num_qubits(); ++q) {
      if (touched[q]) mapping[q] = next++;
    }
    if (next == c.num_qubits()) return unchanged(c, layout);
    for (int q = 0; q < c.num_qubits(); ++q) {
      if (mapping[q] < 0) mapping[q] = next++;  // unused rows, dropped below
    }
    const int width = static_cast<int>(std::count(touched.begin(), touched.end(), true));
    std::vector<int> compact(mapping);
    QuantumCircuit out(width, QubitSpace::Logical);
    for (Instruction g : c.instructions()) {
      for (int i = 0; i < g.arity(); ++i) g.qubits[i] = compact[g.qubits[i]];
      out.append(g);
    }
    return transformed(c, std::move(out), layout);
  }
  if (!layout || layout->idle_wires_contracted) return unchanged(c, layout);
  bool idle_in_image = false;
  for (int p : layout->initial) idle_in_image = idle_in_image || !touched[p];
  if (!idle_in_image) return unchanged(c, layout);
  PassOutcome o = unchanged(c, layout);
  o.layout->idle_wires_contracted = true;
  o.changed = true;
  return o;
}

// ---------------------------------------------------------------------------
// Layout passes

PassOutcome apply_trivial_layout(const QuantumCircuit& c, const BackendModel& b) {
  if (auto why = layout_precheck(c, b)) return failure(c, *why);
  std::vector<int> mapping(c.num_qubits());
  for (int q = 0; q < c.num_qubits(); ++q) mapping[q] = q;
  return place(c, b, mapping);
}

PassOutcome apply_dense_layout(const QuantumCircuit& c, const BackendModel& b) {
  if (auto why = layout_precheck(c, b)) return failure(c, *why);
  const int k = c.num_qubits();
  const int n = b.num_physical();
  if (k == 0) return place(c, b, {});

  struct Region {
    std::vector<int> nodes;
    int edges = 0;
    double eps = 0.0;
  };
  auto internal = [&](const std::vector<bool>& in, int p, int& count, double& eps) {
    count = 0;
    eps = 0.0;
    for (int nb : b.neighbors(p)) {
      if (in[nb]) {
        ++count;
        eps += b.eps_2q(p, nb);
      }
    }
  };
  std::optional<Region> best;
  for (int start = 0; start < n; ++start) {
    Region r;
    std::vector<bool> in(n, false);
    in[start] = true;
    r.nodes.push_back(start);
    while (static_cast<int>(r.nodes.size()) < k) {
      int pick = -1;
      int pick_edges = 0;
      double pick_eps = 0.0;
      for (int p = 0; p < n; ++p) {
        if (in[p]) continue;
        int cnt = 0;
        double eps = 0.0;
        internal(in, p, cnt, eps);
        if (cnt == 0) continue;
        const double mean = eps / cnt;
        if (pick < 0 || cnt > pick_edges || (cnt == pick_edges && mean < pick_eps)) {
          pick = p;
          pick_edges = cnt;
          pick_eps = mean;
        }
      }
      if (pick < 0) break;
      in[pick] = true;
      r.nodes.push_back(pick);
      r.edges += pick_edges;
      r.eps += pick_eps * pick_edges;
    }
    if (static_cast<int>(r.nodes.size()) < k) continue;
    const double mean_eps = r.edges > 0 ? r.eps / r.edges : 0.0;
    const double best_mean = best && best->edges > 0 ? best->eps / best->edges : 0.0;
    if (!best || r.edges > best->edges || (r.edges == best->edges && mean_eps < best_mean)) best = r;
  }
  if (!best) return failure(c, "no connected region large enough");

  // Busiest logical qubits go to the best-connected physical ones.
  const Interactions in = interactions(c);
  std::vector<bool> region(n, false);
  for (int p : best->nodes) region[p] = true;
  std::vector<int> phys = best->nodes;
  std::vector<int> region_degree(n, 0);
  for (int p : phys) {
    for (int nb : b.neighbors(p)) region_degree[p] += region[nb] ? 1 : 0;
  }
  std::stable_sort(phys.begin(), phys.end(), [&](int x, int y) {
    return region_degree[x] != region_degree[y] ? region_degree[x] > region_degree[y] : x < y;
  });
  std::vector<int> logical(k);
  for (int q = 0; q < k; ++q) logical[q] = q;
  std::stable_sort(logical.begin(), logical.end(), [&](int x, int y) { return in.degree[x] > in.degree[y]; });
  std::vector<int> mapping(k);
  for (int i = 0; i < k; ++i) mapping[logical[i]] = phys[i];
  return place(c, b, mapping);
}

PassOutcome apply_vf2_layout(const QuantumCircuit& c, const BackendModel& b, int call_limit,
                             const Deadline& deadline) {
  if (auto why = layout_precheck(c, b)) return failure(c, *why);
  if (call_limit <= 0) return failure(c, "call limit exhausted");
  const int k = c.num_qubits();
  const Interactions in = interactions(c);

  // Pattern over interacting qubits only; isolated ones are placed afterwards.
  std::vector<int> node_of(k, -1);
  std::vector<int> qubit_of;
  for (int q = 0; q < k; ++q) {
    if (in.degree[q] > 0) {
      node_of[q] = static_cast<int>(qubit_of.size());
      qubit_of.push_back(q);
    }
  }
  std::vector<Edge> pattern;
  std::map<Edge, double> cost;
  for (const auto& [e, w] : in.weight) {
    pattern.push_back({node_of[e.first], node_of[e.second]});
    cost[e] = w;
  }
  const PlacementScore score(in, cost, std::vector<bool>(k, true), depth(c), mean_duration(c, b));

  auto complete = [&](const std::vector<int>& match) {
    std::vector<int> mapping(k, -1);
    std::vector<bool> used(b.num_physical(), false);
    for (std::size_t i = 0; i < match.size(); ++i) {
      mapping[qubit_of[i]] = match[i];
      used[match[i]] = true;
    }
    for (int q = 0; q < k; ++q) {
      if (mapping[q] >= 0) continue;
      int pick = -1;
      double pick_cost = 0.0;
      for (int p = 0; p < b.num_physical(); ++p) {
        if (used[p]) continue;
        const double cst = in.oneq[q] * b.eps_1q(p) + in.measures[q] * b.eps_readout(p);
        if (pick < 0 || cst < pick_cost) {
          pick = p;
          pick_cost = cst;
        }
      }
      mapping[q] = pick;
      used[pick] = true;
    }
    return mapping;
  };

  std::optional<std::vector<int>> best;
  double best_score = -std::numeric_limits<double>::infinity();
  auto on_match = [&](const std::vector<int>& match) {
    auto mapping = complete(match);
    const double s = score(b, mapping);
    if (!best || s > best_score) {
      best = std::move(mapping);
      best_score = s;
    }
    return true;
  };
  const auto result = find_monomorphisms(static_cast<int>(qubit_of.size()), pattern, b,
                                         static_cast<std::size_t>(call_limit), deadline, on_match);
  if (!best) {
    return failure(c, result.exhausted ? "interaction graph does not embed in coupling graph"
                                       : "call limit exhausted");
  }
  return place(c, b, *best);
}

PassOutcome apply_noise_aware_layout(const QuantumCircuit& c, const BackendModel& b) {
  if (auto why = layout_precheck(c, b)) return failure(c, *why);
  const int k = c.num_qubits();
  const int n = b.num_physical();
  const Interactions in = interactions(c);
  std::vector<std::vector<int>> w(k, std::vector<int>(k, 0));
  for (const auto& [e, cnt] : in.weight) w[e.first][e.second] = w[e.second][e.first] = cnt;

  auto local_cost = [&](int q, int p) {
    double incident = 0.0;
    for (int nb : b.neighbors(p)) incident += b.eps_2q(p, nb);
    const double mean_incident = b.neighbors(p).empty() ? 0.0 : incident / b.neighbors(p).size();
    return in.degree[q] * mean_incident + in.oneq[q] * b.eps_1q(p) + in.measures[q] * b.eps_readout(p);
  };

  std::vector<int> mapping(k, -1);
  std::vector<bool> used(n, false);
  for (int step = 0; step < k; ++step) {
    // Next logical qubit: strongest tie to placed ones, then busiest.
    int q = -1;
    int q_tie = -1;
    for (int cand = 0; cand < k; ++cand) {
      if (mapping[cand] >= 0) continue;
      int tie = 0;
      for (int m = 0; m < k; ++m) tie += mapping[m] >= 0 ? w[cand][m] : 0;
      if (q < 0 || tie > q_tie || (tie == q_tie && in.degree[cand] > in.degree[q])) {
        q = cand;
        q_tie = tie;
      }
    }
    int pick = -1;
    double pick_cost = 0.0;
    for (int p = 0; p < n; ++p) {
      if (used[p]) continue;
      double cst = 0.0;
      if (q_tie > 0) {
        for (int m = 0; m < k; ++m) {
          if (mapping[m] < 0 || w[q][m] == 0) continue;
          cst += w[q][m] * b.distance(p, mapping[m]) * b.mean_path_eps_2q(p, mapping[m]);
        }
        cst += 1e-3 * (in.oneq[q] * b.eps_1q(p) + in.measures[q] * b.eps_readout(p));
      } else {
        cst = local_cost(q, p);
      }
      if (pick < 0 || cst < pick_cost) {
        pick = p;
        pick_cost = cst;
      }
    }
    mapping[q] = pick;
    used[pick] = true;
  }
  return place(c, b, mapping);
}

// ---------------------------------------------------------------------------
// Routing passes

PassOutcome apply_basic_swap(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                             const Deadline& deadline) {
  if (auto why = routing_precheck(c, b, layout)) return failure(c, *why, layout);
  Router r(c, b, layout);
  for (const auto& g : c.instructions()) {
    deadline.check();
    if (g.arity() == 2) r.route_basic(g);
    r.emit(g);
  }
  return r.finish();
}

PassOutcome apply_sabre_swap_lite(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                  std::uint64_t seed, const Deadline& deadline) {
  if (auto why = routing_precheck(c, b, layout)) return failure(c, *why, layout);
  FrontierRouter fr(c, b, layout, deadline);
  std::mt19937_64 rng(seed);
  std::vector<double> decay(b.num_physical(), 1.0);
  int swaps_since_progress = 0;
  const int valve = 3 * b.num_physical();
  for (;;) {
    if (fr.drain()) {
      swaps_since_progress = 0;
      std::fill(decay.begin(), decay.end(), 1.0);
    }
    if (fr.done()) break;
    deadline.check();
    const auto front = fr.front_two_qubit();
    if (swaps_since_progress >= valve) {
      fr.router().route_basic(fr.gate(front.front()));
      swaps_since_progress = 0;
      continue;
    }
    const auto ext = fr.extended_set();
    const auto& phys_of = fr.router().phys_of();
    std::vector<Edge> best;
    double best_h = std::numeric_limits<double>::infinity();
    for (const Edge& e : fr.candidate_swaps(front, phys_of)) {
      std::vector<int> trial = phys_of;
      apply_swap_to(trial, e);
      const double h = std::max(decay[e.first], decay[e.second]) *
                       (fr.summed_distance(front, trial, 0) + 0.5 * fr.summed_distance(ext, trial, 0));
      if (h < best_h - 1e-12) {
        best_h = h;
        best = {e};
      } else if (std::abs(h - best_h) <= 1e-12) {
        best.push_back(e);
      }
    }
    const Edge pick = best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
    fr.router().swap_physical(pick.first, pick.second);
    decay[pick.first] += 0.001;
    decay[pick.second] += 0.001;
    ++swaps_since_progress;
  }
  return fr.router().finish();
}

PassOutcome apply_lookahead_swap_lite(const QuantumCircuit& c, const BackendModel& b, const Layout& layout, int beam,
                                      int beam_depth, const Deadline& deadline) {
  if (auto why = routing_precheck(c, b, layout)) return failure(c, *why, layout);
  beam = std::max(beam, 1);
  beam_depth = std::max(beam_depth, 1);
  FrontierRouter fr(c, b, layout, deadline);
  struct Node {
    std::vector<int> phys_of;
    std::vector<Edge> swaps;
    double cost = 0.0;
  };
  int swaps_since_progress = 0;
  const int valve = 3 * b.num_physical();
  for (;;) {
    if (fr.drain()) swaps_since_progress = 0;
    if (fr.done()) break;
    deadline.check();
    const auto front = fr.front_two_qubit();
    if (swaps_since_progress >= valve) {
      fr.router().route_basic(fr.gate(front.front()));
      swaps_since_progress = 0;
      continue;
    }
    const auto ext = fr.extended_set();
    auto cost = [&](const Node& nd) {
      return nd.swaps.size() + fr.summed_distance(front, nd.phys_of, 1) + 0.5 * fr.summed_distance(ext, nd.phys_of, 1);
    };
    std::vector<Node> level{{fr.router().phys_of(), {}, 0.0}};
    std::optional<Node> best;
    for (int d = 0; d < beam_depth; ++d) {
      std::vector<Node> next;
      for (const Node& nd : level) {
        for (const Edge& e : fr.candidate_swaps(front, nd.phys_of)) {
          if (!nd.swaps.empty() && nd.swaps.back() == e) continue;
          Node child{nd.phys_of, nd.swaps, 0.0};
          apply_swap_to(child.phys_of, e);
          child.swaps.push_back(e);
          child.cost = cost(child);
          next.push_back(std::move(child));
        }
      }
      std::stable_sort(next.begin(), next.end(), [](const Node& x, const Node& y) { return x.cost < y.cost; });
      if (next.size() > static_cast<std::size_t>(beam)) next.resize(beam);
      for (const Node& nd : next) {
        if (!best || nd.cost < best->cost - 1e-12) best = nd;
      }
      level = std::move(next);
      deadline.check();
    }
    for (const Edge& e : best->swaps) {
      fr.router().swap_physical(e.first, e.second);
      ++swaps_since_progress;
    }
  }
  PassOutcome routed = fr.router().finish();
  PassOutcome basic = apply_basic_swap(c, b, layout, deadline);
  if (count_swaps(routed.circuit) > count_swaps(basic.circuit)) return basic;
  return routed;
}

PassOutcome apply_vf2_post_layout(const QuantumCircuit& c, const BackendModel& b, const Layout& layout,
                                  int call_limit, const Deadline& deadline) {
  if (auto why = routing_precheck(c, b, layout)) return failure(c, *why, layout);
  for (const auto& g : c.instructions()) {
    if (g.arity() == 2 && !b.adjacent(g.qubits[0], g.qubits[1])) return failure(c, "circuit not routed", layout);
  }
  if (call_limit <= 0) return failure(c, "call limit exhausted", layout);
  const int n = b.num_physical();
  const auto touched = touched_qubits(c);
  std::vector<bool> in_set = touched;
  std::vector<bool> active = touched;
  for (int p : layout.initial) {
    in_set[p] = true;
    if (!layout.idle_wires_contracted) active[p] = true;
  }
  std::vector<int> node_of(n, -1);
  std::vector<int> phys_of_node;
  for (int p = 0; p < n; ++p) {
    if (in_set[p]) {
      node_of[p] = static_cast<int>(phys_of_node.size());
      phys_of_node.push_back(p);
    }
  }
  const int k = static_cast<int>(phys_of_node.size());
  if (k == 0) return unchanged(c, layout);

  // Aggregate the circuit onto pattern nodes.
  Interactions in;
  in.degree.assign(k, 0);
  in.oneq.assign(k, 0);
  in.measures.assign(k, 0);
  std::map<Edge, double> cost;
  std::vector<Edge> pattern;
  for (const auto& g : c.instructions()) {
    if (g.arity() == 2) {
      const int u = node_of[g.qubits[0]];
      const int v = node_of[g.qubits[1]];
      const Edge e{std::min(u, v), std::max(u, v)};
      if (cost.find(e) == cost.end()) pattern.push_back(e);
      cost[e] += two_qubit_decomposition_cost(g.kind);
    } else if (g.kind == GateKind::MEASURE) {
      ++in.measures[node_of[g.qubits[0]]];
    } else {
      ++in.oneq[node_of[g.qubits[0]]];
    }
  }
  std::vector<bool> node_active(k);
  for (int i = 0; i < k; ++i) node_active[i] = active[phys_of_node[i]];
  const PlacementScore score(in, cost, node_active, depth(c), mean_duration(c, b));
  const double current = score(b, phys_of_node);

  std::optional<std::vector<int>> best;
  double best_score = current;
  auto on_match = [&](const std::vector<int>& match) {
    const double s = score(b, match);
    if (s > best_score + 1e-12) {
      best = match;
      best_score = s;
    }
    return true;
  };
  find_monomorphisms(k, pattern, b, static_cast<std::size_t>(call_limit), deadline, on_match);
  if (!best) return unchanged(c, layout);

  // Extend to a full permutation of the physical qubits.
  std::vector<int> perm(n, -1);
  std::vector<bool> taken(n, false);
  for (int i = 0; i < k; ++i) {
    perm[phys_of_node[i]] = (*best)[i];
    taken[(*best)[i]] = true;
  }
  int free_slot = 0;
  for (int p = 0; p < n; ++p) {
    if (perm[p] >= 0) continue;
    while (taken[free_slot]) ++free_slot;
    perm[p] = free_slot;
    taken[free_slot] = true;
  }
  QuantumCircuit relabeled = c.relabeled(perm, n, QubitSpace::Physical);
  Layout moved = layout;
  for (auto& p : moved.initial) p = perm[p];
  for (auto& p : moved.final) p = perm[p];
  if (routing_quality(relabeled, b, moved) <= routing_quality(c, b, layout)) return unchanged(c, layout);
  PassOutcome o = transformed(c, std::move(relabeled), moved);
  o.changed = true;
  return o;
}

// ---------------------------------------------------------------------------
// Translation and one-qubit optimization

PassOutcome apply_basis_translation(const QuantumCircuit& c) {
  if (count_out_of_basis(c) == 0) return unchanged(c);
  if (has_three_qubit_gates(c)) return failure(c, "three-qubit gate present");
  std::vector<Instruction> out;
  auto h = [&](int q) {
    out.push_back(make_rz(pi / 2, q));
    out.push_back(make_gate(GateKind::SX, q));
    out.push_back(make_rz(pi / 2, q));
  };
  auto cx = [&](int a, int t) {
    h(t);
    out.push_back(make_gate(GateKind::CZ, a, t));
    h(t);
  };
  for (const auto& g : c.instructions()) {
    const int q = g.qubits[0];
    switch (g.kind) {
      case GateKind::I: break;
      case GateKind::H: h(q); break;
      case GateKind::S: out.push_back(make_rz(pi / 2, q)); break;
      case GateKind::T: out.push_back(make_rz(pi / 4, q)); break;
      case GateKind::CX: cx(q, g.qubits[1]); break;
      case GateKind::SWAP:
        cx(q, g.qubits[1]);
        cx(g.qubits[1], q);
        cx(q, g.qubits[1]);
        break;
      default: out.push_back(g); break;
    }
  }
  return transformed(c, c.with_instructions(std::move(out)));
}

PassOutcome apply_optimize_1q_chains(const QuantumCircuit& c, const Deadline& deadline) {
  const auto& gates = c.instructions();
  const auto seq = wire_sequences(gates, c.num_qubits());
  std::vector<bool> removed(gates.size(), false);
  std::map<std::size_t, std::vector<Instruction>> replacement;  // at first gate of a run
  for (int q = 0; q < c.num_qubits(); ++q) {
    std::vector<std::size_t> run;
    auto flush = [&] {
      if (run.size() >= 2 || (run.size() == 1 && gates[run[0]].kind == GateKind::RZ && is_zero_angle(gates[run[0]].angle))) {
        auto synth = resynthesize(run_matrix(gates, run), q);
        Mat2 check = Mat2::identity();
        for (const auto& g : synth) check = one_qubit_matrix(g.kind, g.angle) * check;
        if (synth.size() < run.size() && equal_up_to_phase(check, run_matrix(gates, run), 1e-9)) {
          for (std::size_t i : run) removed[i] = true;
          replacement[run.front()] = std::move(synth);
        }
      }
      run.clear();
    };
    for (std::size_t i : seq[q]) {
      deadline.check();
      if (gates[i].arity() == 1 && resynthesizable(gates[i].kind)) {
        run.push_back(i);
      } else {
        flush();
      }
    }
    flush();
  }
  if (replacement.empty()) return unchanged(c);
  std::vector<Instruction> out;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (auto it = replacement.find(i); it != replacement.end()) {
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    if (!removed[i]) out.push_back(gates[i]);
  }
  return transformed(c, c.with_instructions(std::move(out)));
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

PassOutcome dispatch(const PassInfo& info, const QuantumCircuit& c, const BackendModel& b,
                     const std::optional<Layout>& layout, const PassOptions& options, const Deadline& deadline) {
  auto need_layout = [&]() -> const Layout* { return layout ? &*layout : nullptr; };
  PassOutcome o;
  switch (info.kind) {
    case PassKind::Unroll3q: o = apply_unroll_3q(c); break;
    case PassKind::RemoveIdentityEquivalent: o = apply_remove_identity_equivalent(c); break;
    case PassKind::CommutativeCancellation: o = apply_commutative_cancellation(c, deadline); break;
    case PassKind::InverseCancellation: o = apply_inverse_cancellation(c); break;
    case PassKind::ContractIdleWires: o = apply_contract_idle_wires(c, layout); break;
    case PassKind::TrivialLayout: return apply_trivial_layout(c, b);
    case PassKind::DenseLayout: return apply_dense_layout(c, b);
    case PassKind::Vf2Layout: return apply_vf2_layout(c, b, options.vf2_call_limit, deadline);
    case PassKind::NoiseAwareLayout: return apply_noise_aware_layout(c, b);
    case PassKind::BasicSwap:
    case PassKind::SabreSwap:
    case PassKind::LookaheadSwap:
    case PassKind::Vf2PostLayout: {
      const Layout* l = need_layout();
      if (l == nullptr) return failure(c, "layout missing", layout);
      if (info.kind == PassKind::BasicSwap) return apply_basic_swap(c, b, *l, deadline);
      if (info.kind == PassKind::SabreSwap) return apply_sabre_swap_lite(c, b, *l, options.seed, deadline);
      if (info.kind == PassKind::LookaheadSwap) {
        return apply_lookahead_swap_lite(c, b, *l, options.lookahead_beam, options.lookahead_depth, deadline);
      }
      return apply_vf2_post_layout(c, b, *l, options.vf2_call_limit, deadline);
    }
    case PassKind::BasisTranslation: o = apply_basis_translation(c); break;
    case PassKind::Optimize1qChains: o = apply_optimize_1q_chains(c, deadline); break;
  }
  // Circuit-only passes keep whatever layout they were given.
  if (info.kind != PassKind::ContractIdleWires) o.layout = layout;
  return o;
}

}  // namespace

PassOutcome run_pass(PassId id, const QuantumCircuit& c, const BackendModel& b, const std::optional<Layout>& layout,
                     const PassOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Deadline deadline = Deadline::after(options.timeout_seconds);
  const PassInfo& info = pass_info(id);
  PassOutcome o;
  try {
    o = dispatch(info, c, b, layout, options, deadline);
    deadline.check();
  } catch (const PassTimeout&) {
    o = failure(c, "Timeout", layout);
  } catch (const Error& e) {
    o = failure(c, e.what(), layout);
  }
  if (o.failed) o.layout = layout;
  o.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

PassOutcome run_optimize_loop(const QuantumCircuit& c, std::span<const PassId> selected, const BackendModel& b,
                              const std::optional<Layout>& layout, const PassOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  PassOutcome acc = unchanged(c, layout);
  acc.iterations = 0;
  if (selected.empty()) return acc;
  std::vector<PassId> order(selected.begin(), selected.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  auto signature = [](const QuantumCircuit& x) { return std::pair{gate_counts(x).total(), depth(x)}; };
  for (int it = 0; it < kMaxOptimizeIterations; ++it) {
    const auto before = signature(acc.circuit);
    for (PassId id : order) {
      PassOutcome step = run_pass(id, acc.circuit, b, acc.layout, options);
      if (step.failed) {
        PassOutcome f = failure(c, *step.failure_reason, layout);
        f.iterations = it + 1;
        f.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return f;
      }
      acc.circuit = std::move(step.circuit);
      acc.layout = std::move(step.layout);
    }
    acc.iterations = it + 1;
    if (signature(acc.circuit) == before) break;
  }
  acc.changed = !(acc.circuit == c) || acc.layout != layout;
  acc.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return acc;
}

}  // namespace passforge
