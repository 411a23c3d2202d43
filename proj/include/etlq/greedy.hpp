#pragma once

#include "etlq/types.hpp"

namespace etlq {

struct GreedyOptions {
  /// Subproblem shape while extending the schedule one step at a time:
  /// Truncated: horizon-k problem with the terminal weight at x(k);
  /// FreeTail: full-horizon problem with steps beyond k unconstrained.
  enum class Tail { Truncated, FreeTail };
  Tail tail = Tail::Truncated;
  int workers = 0;  ///< parallelism across the 2n+1 per-step candidates
};

/// Fix sigma one step at a time, picking the label whose subproblem is
/// cheapest ((2n+1)(N-1) QPs, lowest label on ties), then re-solve the full
/// horizon under the completed schedule. Infeasible when some step has no
/// feasible label.
Solution solve_greedy(const ProblemInstance& inst, const GreedyOptions& opts = {},
                      const Tolerances& tol = {});

}  // namespace etlq
