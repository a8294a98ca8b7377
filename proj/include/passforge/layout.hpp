#pragma once

#include <vector>

namespace passforge {

/// Injective logical -> physical assignment. `initial` is where each logical
/// qubit starts; `final` is where it ends after routing SWAPs.
struct Layout {
  std::vector<int> initial;
  std::vector<int> final;
  /// Set by idle-wire contraction: qubits in the image that no instruction
  /// touches stop counting as active for decoherence averaging.
  bool idle_wires_contracted = false;

  static Layout from_mapping(std::vector<int> logical_to_physical) {
    Layout l;
    l.initial = logical_to_physical;
    l.final = std::move(logical_to_physical);
    return l;
  }

  int num_logical() const { return static_cast<int>(initial.size()); }

  /// True when injective and every image lies in [0, num_physical).
  bool valid_for(int num_physical) const {
    std::vector<bool> used(num_physical, false);
    for (int p : initial) {
      if (p < 0 || p >= num_physical || used[p]) return false;
      used[p] = true;
    }
    return final.size() == initial.size();
  }

  friend bool operator==(const Layout&, const Layout&) = default;
};

}  // namespace passforge
