#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "etlq/types.hpp"

namespace etlq {

/// Dense convex QP: minimize 1/2 z'Hz + g'z subject to A_eq z = b_eq and
/// A_in z <= b_in. H must be PSD, and PD on the null space of A_eq.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  int dim() const { return static_cast<int>(H.rows()); }
  int eq_count() const { return static_cast<int>(A_eq.rows()); }
  int in_count() const { return static_cast<int>(A_in.rows()); }
};

enum class QpStatus { Optimal, Infeasible, MaxIter, Unbounded };

const char* to_string(QpStatus s);

struct QpResult {
  Eigen::VectorXd z;
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  double kkt_residual = 0.0;
  std::vector<int> active_set;  ///< inequality rows active at the solution
  Eigen::VectorXd mult_eq;      ///< equality multipliers
  Eigen::VectorXd mult_in;      ///< inequality multipliers (>= 0)
  double max_violation = 0.0;   ///< phase-1 certificate (see solve_qp)
  int pivots = 0;
  bool phase1_used = false;
};

/// Active-set solve. Starts from the equality-constrained optimum, then adds
/// violated inequality rows (most-violated first, lowest index on ties) with
/// blocking-constraint drops, dual-feasible throughout. When the active-set
/// loop certifies incompatibility, a phase-1 subproblem minimizing the
/// maximum constraint violation produces the certificate max_violation; the
/// problem is Infeasible iff that optimum exceeds tol.feas.
///
/// warm_start biases the order in which violated constraints are taken up
/// (rows active at the warm point first); it never changes the optimum.
QpResult solve_qp(const QpProblem& p,
                  const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                  const Tolerances& tol = {});

/// A sequence QP together with the bookkeeping needed to map its solution
/// back to a trajectory. Decision vector layout: states x(1..N) first, then
/// the non-eliminated inputs in time order. Inputs at zero-label steps are
/// removed outright so they are exactly zero in the reconstruction.
struct SequenceQp {
  QpProblem qp;
  int n = 0;
  int m = 0;
  int N = 0;
  std::vector<int> free_inputs;  ///< times t whose u(t) is a decision variable
  double cost_constant = 0.0;    ///< x0' Q x0, not part of the QP objective

  int state_offset(int t) const { return (t - 1) * n; }
  int input_offset(int free_idx) const { return N * n + free_idx * m; }
};

/// Build the QP for a switching sequence. sigma may be shorter than N
/// (length k): steps t = 1..k-1 get their region rows, inputs at t >= k stay
/// free and states beyond the prefix are unconstrained: the "free tail"
/// variant used by the greedy solver's alternate mode. sigma.size() == N is
/// the full disjunctive subproblem. Throws std::invalid_argument when
/// sigma(0) != classify(x0) or dimensions are inconsistent.
SequenceQp build_sequence_qp(const ProblemInstance& inst,
                             const SwitchSequence& sigma, const RegionSet& rs,
                             const Tolerances& tol = {});

}  // namespace etlq
