#pragma once

#include <utility>
#include <vector>

#include "etlq/types.hpp"

namespace etlq {

/// Partition of {||x||_inf >= eps} into 2n closed dominance cones, each with
/// 2n-1 rows: for coordinate i and sign s, {x : s*x_i >= |x_j| for all j != i,
/// s*x_i >= eps}. Label order: +x_1..+x_n, then -x_1..-x_n.
/// Throws std::invalid_argument for n < 1 or eps <= 0.
RegionSet build_regions(int n, double eps);

/// Label of x: 0 iff ||x||_inf < eps (strict), otherwise the smallest p >= 1
/// with T_p x <= d + tol.mem. Total on R^n.
int classify(const Eigen::VectorXd& x, const RegionSet& rs,
             const Tolerances& tol = {});

/// Roll the dynamics forward from x0 under the given inputs.
Trajectory simulate(const ProblemInstance& inst,
                    const std::vector<Eigen::VectorXd>& inputs);

/// x(N)' P x(N) + sum_t x(t)' Q x(t) + u(t)' R u(t).
double evaluate_cost(const ProblemInstance& inst, const Trajectory& traj);

/// True iff u(t) is zero (within tol.zero) at every t < N whose state is
/// strictly inside the trigger box by at least tol.strict. Second element
/// lists the violating times.
std::pair<bool, std::vector<int>> check_trigger_consistency(
    const ProblemInstance& inst, const Trajectory& traj,
    const Tolerances& tol = {});

/// Schedule validation used by the solvers before a candidate counts as
/// feasible: label-0 states must be strictly inside the box (boundary counts
/// as triggered), label-p states must satisfy the region rows within tol.mem,
/// and the trigger-consistency rule above must hold.
bool validate_schedule(const ProblemInstance& inst, const Trajectory& traj,
                       const SwitchSequence& sigma, const RegionSet& rs,
                       const Tolerances& tol = {});

}  // namespace etlq
