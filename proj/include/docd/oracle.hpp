#pragma once

#include "docd/report.hpp"

namespace docd {

// Re-derives the full protocol outcome — memberships, stored community values,
// round counts, and per-kind message totals — by a global sequential replay
// that never exchanges messages. Used to cross-check the simulator.
Outcome sequential_replay(const Graph& g, int extra_sweeps = 1);

// Exhaustive search over disjoint vertex partitions, maximizing the mean
// community score. Only feasible for tiny graphs (n <= 10).
CommunityAssignment exhaustive_partition_baseline(const Graph& g,
                                                  double* best_score = nullptr);

}  // namespace docd
