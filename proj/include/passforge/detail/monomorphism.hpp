#pragma once

#include <algorithm>
#include <queue>
#include <vector>

namespace passforge {

namespace detail {

template <typename F>
class MonomorphismSearch {
 public:
  MonomorphismSearch(int k, const std::vector<Edge>& pattern_edges, const BackendModel& b, std::size_t call_limit,
                     const Deadline& deadline, F& on_match)
      : k_(k), b_(b), call_limit_(call_limit), deadline_(deadline), on_match_(on_match), adj_(k) {
    for (const auto& [u, v] : pattern_edges) {
      adj_[u].push_back(v);
      adj_[v].push_back(u);
    }
    for (auto& a : adj_) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    build_order();
  }

  MonomorphismResult run() {
    map_.assign(k_, -1);
    used_.assign(b_.num_physical(), false);
    if (k_ > b_.num_physical()) {
      result_.exhausted = true;
      return result_;
    }
    stop_ = false;
    extend(0);
    result_.exhausted = !stop_;
    return result_;
  }

 private:
  void build_order() {
    std::vector<bool> seen(k_, false);
    anchor_.assign(k_, -1);
    for (;;) {
      int start = -1;
      for (int u = 0; u < k_; ++u) {
        if (!seen[u] && (start < 0 || adj_[u].size() > adj_[start].size())) start = u;
      }
      if (start < 0) break;
      std::queue<int> q;
      q.push(start);
      seen[start] = true;
      while (!q.empty()) {
        const int u = q.front();
        q.pop();
        order_.push_back(u);
        std::vector<int> next;
        for (int v : adj_[u]) {
          if (!seen[v]) {
            seen[v] = true;
            anchor_[v] = u;
            next.push_back(v);
          }
        }
        std::stable_sort(next.begin(), next.end(),
                         [&](int x, int y) { return adj_[x].size() > adj_[y].size(); });
        for (int v : next) q.push(v);
      }
    }
  }

  bool feasible(int u, int t) const {
    if (used_[t] || b_.neighbors(t).size() < adj_[u].size()) return false;
    for (int v : adj_[u]) {
      if (map_[v] >= 0 && !b_.adjacent(t, map_[v])) return false;
    }
    return true;
  }

  void try_candidate(std::size_t depth, int u, int t) {
    if (stop_) return;
    if (result_.expansions >= call_limit_) {
      stop_ = true;
      return;
    }
    ++result_.expansions;
    deadline_.check();
    if (!feasible(u, t)) return;
    map_[u] = t;
    used_[t] = true;
    extend(depth + 1);
    used_[t] = false;
    map_[u] = -1;
  }

  void extend(std::size_t depth) {
    if (stop_) return;
    if (depth == order_.size()) {
      ++result_.matches;
      if (!on_match_(static_cast<const std::vector<int>&>(map_))) stop_ = true;
      return;
    }
    const int u = order_[depth];
    if (anchor_[u] >= 0) {
      for (int t : b_.neighbors(map_[anchor_[u]])) {
        try_candidate(depth, u, t);
        if (stop_) return;
      }
    } else {
      for (int t = 0; t < b_.num_physical(); ++t) {
        try_candidate(depth, u, t);
        if (stop_) return;
      }
    }
  }

  int k_;
  const BackendModel& b_;
  std::size_t call_limit_;
  const Deadline& deadline_;
  F& on_match_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> order_;
  std::vector<int> anchor_;
  std::vector<int> map_;
  std::vector<bool> used_;
  bool stop_ = false;
  MonomorphismResult result_;
};

}  // namespace detail

template <typename F>
MonomorphismResult find_monomorphisms(int k, const std::vector<Edge>& pattern_edges, const BackendModel& b,
                                      std::size_t call_limit, const Deadline& deadline, F&& on_match) {
  detail::MonomorphismSearch<std::remove_reference_t<F>> search(k, pattern_edges, b, call_limit, deadline, on_match);
  return search.run();
}

}  // namespace passforge
