#include "passforge/env.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "passforge/error.hpp"
#include "passforge/hashing.hpp"

namespace passforge {

std::uint64_t EnvConfig::observation_hash() const {
  Fnv1a h;
  h.add(std::string_view("passforge-observation-v1"));
  for (int v : {q_max, g_types, t_bins, p_max, e_max, history_len, kGlobalFeatures, kNumActions, kNumStages}) h.add(v);
  return h.value();
}

void EnvConfig::validate() const {
  if (q_max < 1 || p_max < 1 || e_max < 1 || t_bins < 1) throw ValidationError("tensor caps must be positive");
  if (g_types < 8) throw ValidationError("g_types must be at least 8");
  if (history_len != 5) throw ValidationError("history_len must be 5");
  if (max_episode_steps < 16) throw ValidationError("max_episode_steps must be at least 16");
  if (!(shaping_weight >= 0.0) || !(noop_penalty >= 0.0) || !(failure_penalty >= 0.0)) {
    throw ValidationError("reward coefficients must be nonnegative");
  }
}

Stage Observation::stage() const {
  const auto it = std::find(stage_onehot.begin(), stage_onehot.end(), 1.0F);
  return static_cast<Stage>(it - stage_onehot.begin());
}

bool is_fallback_pass(PassId id) {
  return id == PassId::InitUnroll3q || id == PassId::LayoutTrivial || id == PassId::RouteBasicSwap ||
         id == PassId::TranslateBasis;
}

namespace {

int two_qubit_channel(GateKind k) {
  switch (k) {
    case GateKind::CX: return 0;
    case GateKind::CZ: return 1;
    case GateKind::SWAP: return 2;
    default: return 3;  // CCX
  }
}

int one_qubit_channel(GateKind k) {
  switch (k) {
    case GateKind::X: return 0;
    case GateKind::SX: return 1;
    case GateKind::RZ: return 2;
    case GateKind::H: return 3;
    case GateKind::S: return 4;
    case GateKind::T: return 5;
    case GateKind::I: return 6;
    default: return 7;  // MEASURE
  }
}

float coherence_feature(double seconds) { return static_cast<float>(std::clamp(seconds / 500e-6, 0.0, 2.0)); }

struct GraphStats {
  double diameter = 0, max_degree = 0, avg_degree = 0, density = 0, components = 0, largest = 0;
  int nodes = 0;
  std::size_t edges = 0;
};

// Nodes flagged in `present`; edges as index pairs, duplicates removed.
GraphStats graph_stats(const std::vector<bool>& present, std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const int n = static_cast<int>(present.size());
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  GraphStats s;
  s.edges = edges.size();
  for (int v = 0; v < n; ++v) {
    if (!present[v]) continue;
    ++s.nodes;
    s.max_degree = std::max<double>(s.max_degree, static_cast<double>(adj[v].size()));
  }
  if (s.nodes == 0) return s;
  s.avg_degree = 2.0 * static_cast<double>(edges.size()) / s.nodes;
  s.density = s.nodes > 1 ? 2.0 * static_cast<double>(edges.size()) / (s.nodes * (s.nodes - 1.0)) : 0.0;
  std::vector<int> comp(n, -1);
  std::vector<int> dist(n);
  int largest = 0;
  for (int v = 0; v < n; ++v) {
    if (!present[v]) continue;
    if (comp[v] < 0) {
      int size = 0;
      std::queue<int> q;
      q.push(v);
      comp[v] = static_cast<int>(s.components);
      while (!q.empty()) {
        const int x = q.front();
        q.pop();
        ++size;
        for (int y : adj[x]) {
          if (comp[y] < 0) {
            comp[y] = comp[v];
            q.push(y);
          }
        }
      }
      s.components += 1;
      largest = std::max(largest, size);
    }
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    q.push(v);
    dist[v] = 0;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      s.diameter = std::max<double>(s.diameter, dist[x]);
      for (int y : adj[x]) {
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          q.push(y);
        }
      }
    }
  }
  s.largest = static_cast<double>(largest) / s.nodes;
  return s;
}

void put_graph(float* out, const GraphStats& s) {
  out[0] = static_cast<float>(s.diameter / 30.0);
  out[1] = static_cast<float>(s.max_degree / 10.0);
  out[2] = static_cast<float>(s.avg_degree / 5.0);
  out[3] = static_cast<float>(s.density);
  out[4] = static_cast<float>(s.components / 10.0);
  out[5] = static_cast<float>(s.largest);
}

double ratio(double a, double b) { return b > 0.0 ? a / b : 0.0; }

}  // namespace

CompilationEnv::CompilationEnv(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Observation CompilationEnv::reset(const QuantumCircuit& circuit, const BackendModel& backend) {
  if (circuit.qubit_space() != QubitSpace::Logical) throw ValidationError("reset expects a logical circuit");
  if (circuit.num_qubits() > cfg_.q_max) {
    throw ValidationError("circuit width " + std::to_string(circuit.num_qubits()) + " exceeds q_max " +
                          std::to_string(cfg_.q_max));
  }
  if (circuit.num_qubits() > backend.num_physical()) throw ValidationError("circuit wider than backend");
  if (backend.num_physical() > cfg_.p_max || static_cast<int>(backend.num_edges()) > cfg_.e_max) {
    throw ValidationError("backend exceeds p_max/e_max observation slots");
  }
  circuit.validate();
  if (!backend_ || backend_fingerprint_ != backend.fingerprint()) {
    backend_ = std::make_shared<const BackendModel>(backend);
    backend_fingerprint_ = backend.fingerprint();
  }
  original_ = circuit;
  logical_ = circuit;
  circuit_ = circuit;
  layout_.reset();
  stage_ = Stage::Init;
  done_ = false;
  steps_ = 0;
  stage_steps_ = 0;
  initial_gates_ = gate_counts(circuit).gates();
  initial_depth_ = depth(circuit);
  structural_reference_ = static_cast<double>(initial_gates_) + initial_depth_;
  stage_end_proxy_ = {};
  succeeded_.reset();
  failed_.reset();
  pending_follow_ups_.reset();
  optimize_selection_.clear();
  noop_counts_.fill(0);
  last_action_ = -1;
  consecutive_noops_ = 0;
  history_.clear();
  actions_.clear();
  trace_.clear();
  reference_.reset();
  set_potential();
  return observation();
}

bool CompilationEnv::has_uncoupled_2q() const {
  if (circuit_.qubit_space() != QubitSpace::Physical) return true;
  for (const auto& g : circuit_.instructions()) {
    if (g.arity() >= 2 && (g.arity() > 2 || !backend_->adjacent(g.qubits[0], g.qubits[1]))) return true;
  }
  return false;
}

bool CompilationEnv::hard_constraints_hold() const {
  switch (stage_) {
    case Stage::Init: return !has_three_qubit_gates(circuit_);
    case Stage::Layout: return layout_.has_value();
    case Stage::Routing: return !has_uncoupled_2q();
    case Stage::Translate: return count_out_of_basis(circuit_) == 0;
    default: return true;
  }
}

bool CompilationEnv::prerequisites_met(const PassInfo& p) const {
  if (p.prerequisites.empty()) return true;
  return std::any_of(p.prerequisites.begin(), p.prerequisites.end(), [&](PassId id) {
    return succeeded_[static_cast<std::size_t>(id)] || pass_info(id).stage < stage_;
  });
}

bool CompilationEnv::forced_mode() const {
  int needed = 0;
  for (int s = static_cast<int>(stage_); s < kNumStages; ++s) needed += s <= static_cast<int>(Stage::Translate) ? 2 : 1;
  return cfg_.max_episode_steps - steps_ <= needed;
}

std::optional<int> CompilationEnv::forced_action() const {
  if (hard_constraints_hold()) return kSkipAction;
  switch (stage_) {
    case Stage::Init: return static_cast<int>(PassId::InitUnroll3q);
    case Stage::Layout: return static_cast<int>(PassId::LayoutTrivial);
    case Stage::Routing: return static_cast<int>(PassId::RouteBasicSwap);
    case Stage::Translate: return static_cast<int>(PassId::TranslateBasis);
    default: return kSkipAction;
  }
}

ActionMask CompilationEnv::action_mask() const {
  ActionMask mask;
  if (done_) return mask;
  if (forced_mode()) {
    mask.set(static_cast<std::size_t>(*forced_action()));
    return mask;
  }
  const bool routed = std::any_of(pass_catalog().begin(), pass_catalog().end(), [&](const PassInfo& p) {
    return p.stage == Stage::Routing && p.kind != PassKind::Vf2PostLayout && succeeded_[static_cast<std::size_t>(p.id)];
  });
  for (const auto& p : pass_catalog()) {
    if (p.stage != stage_) continue;
    const auto i = static_cast<std::size_t>(p.id);
    if (failed_[i] && !is_fallback_pass(p.id)) continue;
    if (!prerequisites_met(p)) continue;
    if (stage_ == Stage::Routing && p.kind != PassKind::Vf2PostLayout && routed) continue;
    if (stage_ == Stage::Translate && count_out_of_basis(circuit_) == 0) continue;
    mask.set(i);
  }
  std::bitset<kNumPasses> pending = pending_follow_ups_ & ~failed_;
  if (hard_constraints_hold() && pending.none()) mask.set(kSkipAction);
  if (mask.none()) mask.set(static_cast<std::size_t>(*forced_action()));
  return mask;
}

void CompilationEnv::set_potential() {
  potential_ = stage_proxy(stage_, circuit_, layout_, *backend_, structural_reference_);
}

double CompilationEnv::apply_pass(PassId id, StepInfo& info) {
  const PassInfo& p = pass_info(id);
  PassOptions options = cfg_.pass_options;
  options.timeout_seconds = cfg_.pass_timeout;
  const bool layout_pass = p.stage == Stage::Layout;
  PassOutcome o = layout_pass ? run_pass(id, logical_, *backend_, std::nullopt, options)
                              : run_pass(id, circuit_, *backend_, layout_, options);
  const int action = static_cast<int>(id);
  if (o.failed) {
    failed_.set(static_cast<std::size_t>(id));
    info.failed = true;
    info.failure_reason = o.failure_reason;
    info.penalty = -cfg_.failure_penalty;
    last_action_ = action;
    consecutive_noops_ = 0;
    return info.penalty;
  }
  const bool changed = layout_pass ? !(layout_ && o.layout == layout_) : o.changed;
  succeeded_.set(static_cast<std::size_t>(id));
  circuit_ = std::move(o.circuit);
  layout_ = std::move(o.layout);
  if (stage_ == Stage::Optimize && std::find(optimize_selection_.begin(), optimize_selection_.end(), id) ==
                                       optimize_selection_.end()) {
    optimize_selection_.push_back(id);
  }
  pending_follow_ups_.reset(static_cast<std::size_t>(id));
  for (PassId f : p.follow_ups) pending_follow_ups_.set(static_cast<std::size_t>(f));

  const auto before = potential_;
  set_potential();
  if (before && potential_) info.shaped = cfg_.shaping_weight * (*potential_ - *before);
  info.changed = changed;
  if (!changed) {
    const int n = last_action_ == action ? consecutive_noops_ : 0;
    info.penalty = -cfg_.noop_penalty * n;
    consecutive_noops_ = n + 1;
    ++noop_counts_[static_cast<std::size_t>(id)];
  } else {
    consecutive_noops_ = 0;
  }
  last_action_ = action;
  return info.shaped + info.penalty;
}

const QualityReport& CompilationEnv::reference_for(const QuantumCircuit& logical) {
  const auto key = std::pair{circuit_hash(logical), backend_fingerprint_};
  if (auto it = reference_cache_.find(key); it != reference_cache_.end()) return it->second;
  if (reference_cache_.size() >= 256) reference_cache_.clear();
  PassOptions options = cfg_.pass_options;
  options.timeout_seconds = cfg_.pass_timeout;
  return reference_cache_[key] = fixed_pipeline(FixedPipeline::FidelityOptimized, logical, *backend_, options).report;
}

double CompilationEnv::advance_stage(StepInfo& info) {
  stage_end_proxy_[static_cast<std::size_t>(stage_)] = potential_;
  PassOptions options = cfg_.pass_options;
  options.timeout_seconds = cfg_.pass_timeout;
  double reward = 0.0;
  switch (stage_) {
    case Stage::Init: {
      logical_ = circuit_;
      stage_ = Stage::Layout;
      std::vector<int> identity(static_cast<std::size_t>(logical_.num_qubits()));
      for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
      potential_ = layout_quality(logical_, *backend_, Layout::from_mapping(identity));
      break;
    }
    case Stage::Layout:
      stage_ = Stage::Routing;
      potential_ = layout_quality(circuit_, *backend_, *layout_);
      break;
    case Stage::Routing:
      stage_ = Stage::Translate;
      potential_.reset();
      break;
    case Stage::Translate:
      stage_ = Stage::Optimize;
      set_potential();
      break;
    case Stage::Optimize: {
      const auto before = potential_;
      if (!optimize_selection_.empty()) {
        PassOutcome o = run_optimize_loop(circuit_, optimize_selection_, *backend_, layout_, options);
        if (!o.failed) {
          info.changed = o.changed;
          circuit_ = std::move(o.circuit);
          layout_ = std::move(o.layout);
        }
      }
      set_potential();
      if (before && potential_) info.shaped = cfg_.shaping_weight * (*potential_ - *before);
      reward += info.shaped;
      stage_end_proxy_[static_cast<std::size_t>(Stage::Optimize)] = potential_;
      stage_ = Stage::Cleanup;
      break;
    }
    case Stage::Cleanup: {
      if (count_out_of_basis(circuit_) > 0) {
        PassOutcome o = run_pass(PassId::TranslateBasis, circuit_, *backend_, layout_, options);
        if (!o.failed) {
          circuit_ = std::move(o.circuit);
          layout_ = std::move(o.layout);
        }
        set_potential();
        stage_end_proxy_[static_cast<std::size_t>(Stage::Cleanup)] = potential_;
      }
      done_ = true;
      if (cfg_.use_reference && layout_ && is_executable(circuit_, *backend_)) {
        reference_ = reference_for(original_);
        const QualityReport mine = quality_report(circuit_, *backend_, *layout_);
        info.final_reward = final_reward(mine.esp, reference_->esp, static_cast<double>(mine.gate_counts.gates()),
                                         static_cast<double>(reference_->gate_counts.gates()), mine.depth,
                                         reference_->depth, cfg_.reward_weights);
        reward += info.final_reward;
      }
      break;
    }
  }
  stage_steps_ = 0;
  last_action_ = -1;
  consecutive_noops_ = 0;
  pending_follow_ups_.reset();
  return reward;
}

StepResult CompilationEnv::step(int action) {
  if (done_) throw ContractError("step called on a finished episode");
  if (action < 0 || action >= kNumActions || !action_mask()[static_cast<std::size_t>(action)]) {
    throw ContractError("action " + std::to_string(action) + " is masked");
  }
  StepInfo info;
  info.stage = stage_;
  info.action = action;
  double reward = action == kSkipAction ? advance_stage(info) : apply_pass(static_cast<PassId>(action), info);
  ++steps_;
  ++stage_steps_;
  if (action == kSkipAction) stage_steps_ = 0;
  history_.push_front(action);
  if (static_cast<int>(history_.size()) > cfg_.history_len) history_.pop_back();
  actions_.push_back(action);
  if (!done_ && steps_ >= cfg_.max_episode_steps) {
    done_ = true;
    info.failed = true;
    info.failure_reason = "episode step cap reached";
  }
  info.proxy = potential_;
  info.gates = gate_counts(circuit_).gates();
  info.depth = depth(circuit_);
  trace_.push_back(info);
  return {observation(), reward, done_, std::move(info)};
}

QualityReport CompilationEnv::final_report() const {
  if (!done_ || !layout_) throw ContractError("episode not finished");
  return quality_report(circuit_, *backend_, *layout_);
}

Observation CompilationEnv::observation() const {
  if (!backend_) throw ContractError("observation before reset");
  const BackendModel& b = *backend_;
  Observation obs;
  obs.stage_onehot[static_cast<std::size_t>(stage_)] = 1.0F;

  const int Q = cfg_.q_max, G = cfg_.g_types, T = cfg_.t_bins;
  const CircuitDag dag(circuit_);
  const int d = dag.depth();
  auto bin_of = [&](std::size_t node) {
    if (d <= 0) return 0;
    return std::min(T - 1, dag.layer_of(node) * T / d);
  };
  const auto& gates = circuit_.instructions();
  const bool post = stage_ >= Stage::Translate;
  if (!post) {
    obs.circuit_tensor.assign(static_cast<std::size_t>(cfg_.pre_tensor_size()), 0.0F);
    std::vector<int> slot(static_cast<std::size_t>(circuit_.num_qubits()), -1);
    if (circuit_.qubit_space() == QubitSpace::Logical) {
      for (int q = 0; q < circuit_.num_qubits(); ++q) slot[q] = q < Q ? q : -1;
    } else if (layout_) {
      int next = 0;
      for (std::size_t v = 0; v < layout_->initial.size(); ++v) {
        slot[layout_->initial[v]] = static_cast<int>(v);
        next = std::max(next, static_cast<int>(v) + 1);
      }
      const auto touched = touched_qubits(circuit_);
      for (int p = 0; p < circuit_.num_qubits(); ++p) {
        if (slot[p] < 0 && touched[p] && next < Q) slot[p] = next++;
      }
    }
    const std::size_t one_offset = static_cast<std::size_t>(Q) * Q * G * T;
    auto add_pair = [&](int a, int c, int ch, int bin) {
      if (a < 0 || c < 0 || a >= Q || c >= Q) return;
      obs.circuit_tensor[((static_cast<std::size_t>(a) * Q + c) * G + ch) * T + bin] += 1.0F;
    };
    for (std::size_t i = 0; i < gates.size(); ++i) {
      const auto& g = gates[i];
      const int bin = bin_of(i);
      if (g.arity() == 1) {
        const int s = slot[g.qubits[0]];
        if (s >= 0 && s < Q) {
          obs.circuit_tensor[one_offset + (static_cast<std::size_t>(s) * G + one_qubit_channel(g.kind)) * T + bin] +=
              1.0F;
        }
      } else if (g.arity() == 2) {
        add_pair(slot[g.qubits[0]], slot[g.qubits[1]], two_qubit_channel(g.kind), bin);
      } else {
        add_pair(slot[g.qubits[0]], slot[g.qubits[2]], two_qubit_channel(g.kind), bin);
        add_pair(slot[g.qubits[1]], slot[g.qubits[2]], two_qubit_channel(g.kind), bin);
      }
    }
  } else {
    obs.circuit_tensor.assign(static_cast<std::size_t>(cfg_.post_tensor_size()), 0.0F);
    const std::size_t one_offset = static_cast<std::size_t>(cfg_.e_max) * G * T * 4;
    for (std::size_t i = 0; i < gates.size(); ++i) {
      const auto& g = gates[i];
      const int bin = bin_of(i);
      if (g.arity() == 2) {
        const int e = b.edge_index(g.qubits[0], g.qubits[1]);
        if (e < 0 || e >= cfg_.e_max) continue;
        float* cell = &obs.circuit_tensor[((static_cast<std::size_t>(e) * G + two_qubit_channel(g.kind)) * T + bin) * 4];
        const auto [p0, p1] = b.edges()[static_cast<std::size_t>(e)];
        cell[0] += 1.0F;
        cell[1] = static_cast<float>(b.eps_2q(e));
        cell[2] = coherence_feature(0.5 * (b.t1(p0) + b.t1(p1)));
        cell[3] = coherence_feature(0.5 * (b.t2(p0) + b.t2(p1)));
      } else if (g.arity() == 1) {
        const int q = g.qubits[0];
        if (q >= cfg_.p_max) continue;
        float* cell =
            &obs.circuit_tensor[one_offset + ((static_cast<std::size_t>(q) * G + one_qubit_channel(g.kind)) * T + bin) * 5];
        cell[0] += 1.0F;
        cell[1] = static_cast<float>(b.eps_1q(q));
        cell[2] = static_cast<float>(b.eps_readout(q));
        cell[3] = coherence_feature(b.t1(q));
        cell[4] = coherence_feature(b.t2(q));
      }
    }
  }

  // Global features.
  auto& gl = obs.global;
  const GateCounts counts = gate_counts(circuit_);
  const double n_gates = static_cast<double>(counts.gates());
  const auto touched = touched_qubits(circuit_);
  const double width = static_cast<double>(std::count(touched.begin(), touched.end(), true));
  std::size_t max_parallel = 0;
  for (const auto& layer : dag.layer_groups()) max_parallel = std::max(max_parallel, layer.size());
  const bool translated = post && count_out_of_basis(circuit_) == 0;
  gl[0] = static_cast<float>(static_cast<double>(counts.total()) / 1000.0);
  gl[1] = static_cast<float>(static_cast<double>(counts.one_qubit) / 1000.0);
  gl[2] = static_cast<float>(static_cast<double>(counts.two_qubit) / 1000.0);
  gl[3] = static_cast<float>(d / 100.0);
  gl[4] = static_cast<float>(width / 127.0);
  gl[5] = static_cast<float>(ratio(d, n_gates));
  gl[6] = static_cast<float>(ratio(static_cast<double>(counts.two_qubit), n_gates));
  gl[7] = static_cast<float>(ratio(static_cast<double>(counts.total()), d) / 10.0);
  gl[8] = static_cast<float>(static_cast<double>(max_parallel) / 10.0);
  gl[9] = translated && layout_ ? static_cast<float>(esp(circuit_, b, *layout_)) : 0.0F;
  gl[10] = stage_ <= Stage::Routing ? 1.0F : 0.0F;
  gl[11] = post ? 1.0F : 0.0F;
  gl[12] = translated ? 1.0F : 0.0F;
  gl[13] = static_cast<float>(ratio(static_cast<double>(counts.total() - count_out_of_basis(circuit_)),
                                    static_cast<double>(counts.total())));

  std::vector<Edge> interactions;
  for (const auto& g : gates) {
    for (int a = 0; a < g.arity(); ++a) {
      for (int c = a + 1; c < g.arity(); ++c) {
        interactions.emplace_back(std::min(g.qubits[a], g.qubits[c]), std::max(g.qubits[a], g.qubits[c]));
      }
    }
  }
  const GraphStats cs = graph_stats(touched, interactions);
  const GraphStats bs = graph_stats(std::vector<bool>(static_cast<std::size_t>(b.num_physical()), true), b.edges());
  put_graph(&gl[14], cs);
  put_graph(&gl[20], bs);
  gl[26] = static_cast<float>(ratio(width, b.num_physical()));
  gl[27] = static_cast<float>(std::min(2.0, ratio(static_cast<double>(cs.edges), static_cast<double>(bs.edges))));
  gl[28] = static_cast<float>(std::min(2.0, ratio(cs.max_degree, bs.max_degree)));
  gl[29] = static_cast<float>(std::min(2.0, ratio(cs.diameter, bs.diameter)));
  gl[30] = layout_ ? 1.0F : 0.0F;
  gl[31] = potential_ ? static_cast<float>(*potential_) : 0.0F;

  // History.
  obs.history.assign(static_cast<std::size_t>(cfg_.history_size()), 0.0F);
  for (std::size_t i = 0; i < history_.size(); ++i) {
    obs.history[i] = static_cast<float>(history_[i] + 1) / static_cast<float>(kNumActions);
  }
  for (int p = 0; p < kNumPasses; ++p) {
    obs.history[static_cast<std::size_t>(cfg_.history_len + p)] =
        std::min(1.0F, static_cast<float>(noop_counts_[static_cast<std::size_t>(p)]) / 5.0F);
  }
  obs.history.back() = static_cast<float>(stage_steps_) / 30.0F;
  return obs;
}

void CompilationEnv::write_trace_jsonl(std::ostream& os) const {
  for (std::size_t i = 0; i < trace_.size(); ++i) {
    const StepInfo& s = trace_[i];
    nlohmann::json j = {{"step", i},
                        {"stage", stage_name(s.stage)},
                        {"action", s.action},
                        {"action_name", s.action == kSkipAction ? std::string("skip") : std::string(pass_info(static_cast<PassId>(s.action)).name)},
                        {"changed", s.changed},
                        {"failed", s.failed},
                        {"shaped", s.shaped},
                        {"penalty", s.penalty},
                        {"final_reward", s.final_reward},
                        {"gates", s.gates},
                        {"depth", s.depth}};
    j["failure_reason"] = s.failure_reason ? nlohmann::json(*s.failure_reason) : nlohmann::json(nullptr);
    j["proxy"] = s.proxy ? nlohmann::json(*s.proxy) : nlohmann::json(nullptr);
    os << j.dump() << '\n';
  }
}

}  // namespace passforge
