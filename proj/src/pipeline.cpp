#include "passforge/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "passforge/error.hpp"
#include "passforge/parallel.hpp"

namespace passforge {

std::optional<double> stage_proxy(Stage s, const QuantumCircuit& c, const std::optional<Layout>& layout,
                                  const BackendModel& b, double structural_reference) {
  switch (s) {
    case Stage::Init: return structural_score(c, structural_reference);
    case Stage::Layout:
      if (!layout) return std::nullopt;
      return layout_quality(c, b, *layout);
    case Stage::Routing:
      if (!layout) return std::nullopt;
      return routing_quality(c, b, *layout);
    case Stage::Translate: return std::nullopt;
    case Stage::Optimize:
    case Stage::Cleanup:
      if (!layout || count_out_of_basis(c) > 0) return std::nullopt;
      return esp(c, b, *layout);
  }
  return std::nullopt;
}

bool is_executable(const QuantumCircuit& c, const BackendModel& b) {
  if (c.qubit_space() != QubitSpace::Physical || c.num_qubits() != b.num_physical()) return false;
  for (const auto& g : c.instructions()) {
    if (!is_basis(g.kind)) return false;
    if (g.arity() == 2 && !b.adjacent(g.qubits[0], g.qubits[1])) return false;
  }
  return true;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Applies passes to a running (circuit, layout) pair; failures leave it intact.
class Runner {
 public:
  Runner(const QuantumCircuit& c, const BackendModel& b, const PassOptions& options)
      : b_(b), options_(options), circuit_(c), reference_(gate_counts(c).gates() + depth(c)) {}

  bool apply(PassId id) {
    PassOutcome o = run_pass(id, circuit_, b_, layout_, options_);
    if (o.failed) return false;
    circuit_ = std::move(o.circuit);
    layout_ = std::move(o.layout);
    trace_.push_back(static_cast<int>(id));
    return true;
  }

  bool optimize_loop(const std::vector<PassId>& selected) {
    PassOutcome o = run_optimize_loop(circuit_, selected, b_, layout_, options_);
    if (o.failed) return false;
    circuit_ = std::move(o.circuit);
    layout_ = std::move(o.layout);
    for (PassId id : selected) trace_.push_back(static_cast<int>(id));
    return true;
  }

  void end_stage(Stage s) {
    proxies_[static_cast<std::size_t>(s)] = stage_proxy(s, circuit_, layout_, b_, reference_);
    trace_.push_back(kSkipAction);
  }

  CompileResult finish(Clock::time_point start) {
    if (count_out_of_basis(circuit_) > 0) apply(PassId::TranslateBasis);
    if (!layout_ || !is_executable(circuit_, b_)) throw Error("pipeline produced a non-executable circuit");
    CompileResult r;
    r.report = quality_report(circuit_, b_, *layout_);
    r.circuit = std::move(circuit_);
    r.layout = std::move(*layout_);
    r.trace = std::move(trace_);
    r.stage_proxy = proxies_;
    r.compile_seconds = seconds_since(start);
    return r;
  }

 private:
  const BackendModel& b_;
  PassOptions options_;
  QuantumCircuit circuit_;
  std::optional<Layout> layout_;
  double reference_;
  std::vector<int> trace_;
  std::array<std::optional<double>, kNumStages> proxies_{};
};

CompileResult time_optimized(const QuantumCircuit& c, const BackendModel& b, const PassOptions& options) {
  const auto start = Clock::now();
  Runner r(c, b, options);
  r.apply(PassId::InitUnroll3q);
  r.end_stage(Stage::Init);
  if (!r.apply(PassId::LayoutTrivial)) throw Error("trivial layout failed");
  r.end_stage(Stage::Layout);
  r.apply(PassId::RouteBasicSwap);
  r.end_stage(Stage::Routing);
  r.apply(PassId::TranslateBasis);
  r.end_stage(Stage::Translate);
  r.end_stage(Stage::Optimize);
  r.end_stage(Stage::Cleanup);
  return r.finish(start);
}

}  // namespace

bool is_toggleable(PassKind kind) {
  switch (kind) {
    case PassKind::RemoveIdentityEquivalent:
    case PassKind::CommutativeCancellation:
    case PassKind::ContractIdleWires:
    case PassKind::Vf2Layout:
    case PassKind::NoiseAwareLayout:
    case PassKind::Vf2PostLayout:
    case PassKind::Optimize1qChains:
      return true;
    default:
      return false;
  }
}

std::vector<PassId> default_toggles() {
  return {PassId::LayoutVf2, PassId::RouteVf2PostLayout, PassId::InitRemoveIdentity,
          PassId::InitCommutativeCancellation, PassId::OptContractIdleWires};
}

CompileResult fidelity_skeleton(const QuantumCircuit& c, const BackendModel& b, std::span<const PassKind> disabled,
                                const PassOptions& options) {
  const auto start = Clock::now();
  auto on = [&](PassId id) {
    return std::find(disabled.begin(), disabled.end(), pass_info(id).kind) == disabled.end();
  };
  auto maybe = [&](Runner& r, PassId id) {
    if (on(id)) r.apply(id);
  };
  Runner r(c, b, options);

  r.apply(PassId::InitUnroll3q);
  maybe(r, PassId::InitRemoveIdentity);
  if (on(PassId::InitCommutativeCancellation) && r.apply(PassId::InitCommutativeCancellation)) {
    maybe(r, PassId::InitRemoveIdentity);
  }
  r.end_stage(Stage::Init);

  const bool placed = (on(PassId::LayoutVf2) && r.apply(PassId::LayoutVf2)) ||
                      (on(PassId::LayoutNoiseAware) && r.apply(PassId::LayoutNoiseAware)) ||
                      r.apply(PassId::LayoutTrivial);
  if (!placed) throw Error("no layout pass succeeded");
  r.end_stage(Stage::Layout);

  if (r.apply(PassId::RouteSabre) || r.apply(PassId::RouteBasicSwap)) maybe(r, PassId::RouteVf2PostLayout);
  r.end_stage(Stage::Routing);

  r.apply(PassId::TranslateBasis);
  r.end_stage(Stage::Translate);

  std::vector<PassId> selected;
  for (const auto& p : pass_catalog()) {
    if (p.stage == Stage::Optimize && on(p.id)) selected.push_back(p.id);
  }
  r.optimize_loop(selected);
  r.end_stage(Stage::Optimize);

  for (const auto& p : pass_catalog()) {
    if (p.stage == Stage::Cleanup) maybe(r, p.id);
  }
  r.end_stage(Stage::Cleanup);
  return r.finish(start);
}

CompileResult fixed_pipeline(FixedPipeline kind, const QuantumCircuit& c, const BackendModel& b,
                             const PassOptions& options) {
  if (kind == FixedPipeline::TimeOptimized) return time_optimized(c, b, options);
  return fidelity_skeleton(c, b, {}, options);
}

BruteForceResult brute_force_selective(const QuantumCircuit& c, const BackendModel& b,
                                       std::span<const PassId> toggles, const PassOptions& options) {
  if (toggles.size() > kMaxToggles) throw ValidationError("at most 8 toggles are supported");
  std::vector<PassKind> kinds;
  for (PassId id : toggles) {
    const PassKind k = pass_info(id).kind;
    if (!is_toggleable(k)) {
      throw ValidationError(std::string(pass_info(id).name) + " is not an optional step of the pipeline");
    }
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) {
      throw ValidationError("toggles " + std::string(pass_info(id).name) + " share a pass kind");
    }
    kinds.push_back(k);
  }
  BruteForceResult out;
  out.toggles.assign(toggles.begin(), toggles.end());
  const std::uint32_t configs = std::uint32_t{1} << toggles.size();
  std::vector<CompileResult> results(configs);
  parallel_for(configs, [&](std::size_t mask) {
    std::vector<PassKind> disabled;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (!((mask >> i) & 1U)) disabled.push_back(kinds[i]);
    }
    results[mask] = fidelity_skeleton(c, b, disabled, options);
  });
  out.rows.resize(configs);
  for (std::uint32_t mask = 0; mask < configs; ++mask) {
    out.rows[mask] = {mask, results[mask].report, results[mask].compile_seconds};
    if (results[mask].report.esp >= out.rows[out.best_mask].report.esp) out.best_mask = mask;
  }
  out.best_stage_proxy = results[out.best_mask].stage_proxy;
  return out;
}

void write_brute_force_csv(std::ostream& os, const BruteForceResult& r) {
  os << "# toggles (bit i = column i):";
  for (std::size_t i = 0; i < r.toggles.size(); ++i) os << (i ? "," : " ") << pass_info(r.toggles[i]).name;
  os << "\n# best config: " << r.best_mask << "\n";
  os << "config,esp,gates,depth,compile_ms\n";
  const auto precision = os.precision(12);
  for (const auto& row : r.rows) {
    os << row.mask << ',' << row.report.esp << ',' << row.report.gate_counts.gates() << ',' << row.report.depth << ','
       << row.compile_seconds * 1e3 << '\n';
  }
  os.precision(precision);
}

}  // namespace passforge
