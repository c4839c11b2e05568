#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ubgrad {

/// Work accounting in h^-1 units: a forward solve at mesh level m costs 2^m.
/// The samplers charge two solves per particle per level visited (the
/// level-ratio potential needs consecutive mesh levels; repeated density
/// evaluations on cached observations are free).
struct CostLedger {
  double total_units = 0.0;
  std::vector<std::int64_t> solves;  // indexed by mesh level

  void record_solve(int mesh_level, std::int64_t count = 1) {
    if (mesh_level >= static_cast<int>(solves.size())) {
      solves.resize(mesh_level + 1, 0);
    }
    solves[mesh_level] += count;
    total_units += static_cast<double>(count) * std::ldexp(1.0, mesh_level);
  }

  void merge(const CostLedger& other) {
    if (other.solves.size() > solves.size()) solves.resize(other.solves.size(), 0);
    for (std::size_t m = 0; m < other.solves.size(); ++m) {
      solves[m] += other.solves[m];
    }
    total_units += other.total_units;
  }
};

}  // namespace ubgrad
