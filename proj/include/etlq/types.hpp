#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "etlq/tolerances.hpp"

namespace etlq {

/// One finite-horizon event-triggered LQ problem: dynamics x+ = Ax + Bu,
/// quadratic stage/terminal weights, trigger threshold eps (the state box
/// ||x||_inf < eps inside which the input is forced to zero), horizon N and
/// initial state x0.
struct ProblemInstance {
  Eigen::MatrixXd A;   ///< n x n
  Eigen::MatrixXd B;   ///< n x m
  Eigen::MatrixXd Q;   ///< n x n, symmetric PSD
  Eigen::MatrixXd R;   ///< m x m, symmetric PD
  Eigen::MatrixXd P;   ///< n x n, symmetric PSD terminal weight
  Eigen::VectorXd x0;  ///< n
  double eps = 0.0;    ///< trigger threshold, > 0
  int N = 0;           ///< horizon, >= 1

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Same plant/weights with a shorter horizon (used by the greedy solver).
  ProblemInstance truncated(int horizon) const {
    ProblemInstance t = *this;
    t.N = horizon;
    return t;
  }

  /// Same problem restarted from a different state (receding horizon).
  ProblemInstance from_state(const Eigen::VectorXd& x) const {
    ProblemInstance t = *this;
    t.x0 = x;
    return t;
  }
};

/// Throws std::invalid_argument when dimensions are inconsistent, weights
/// violate their definiteness requirements, eps <= 0 or N < 1.
void validate_instance(const ProblemInstance& inst, const Tolerances& tol = {});

/// Diagnostic only: (A, B) stabilizability via the PBH rank test on the
/// unstable eigenvalues. The solvers never reject unstabilizable pairs.
bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     double rank_tol = 1e-9);

/// One closed polyhedron {x : T x <= d} of the trigger-region partition.
struct Region {
  Eigen::MatrixXd T;  ///< (2n-1) x n
  Eigen::VectorXd d;  ///< 2n-1
};

/// The complement of the trigger box, split into 2n closed polyhedra.
/// Region label 0 is the open box itself and stores no matrix; labels
/// 1..n are the +x_1..+x_n dominant cones, n+1..2n the -x_1..-x_n ones.
struct RegionSet {
  int n = 0;
  double eps = 0.0;
  std::vector<Region> regions;  ///< index p-1 holds region p, p = 1..2n

  int label_count() const { return 2 * n + 1; }  ///< including label 0
};

/// Per-step region labels sigma(0..N-1); label 0 marks the zero-input steps.
using SwitchSequence = std::vector<int>;

/// Times t < N with sigma(t) = 0.
inline std::set<int> event_set(const SwitchSequence& sigma) {
  std::set<int> T;
  for (int t = 0; t < static_cast<int>(sigma.size()); ++t)
    if (sigma[t] == 0) T.insert(t);
  return T;
}

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  ///< x(0..N)
  std::vector<Eigen::VectorXd> inputs;  ///< u(0..N-1)
};

enum class SolveStatus { Optimal, Feasible, Infeasible, NoConvergence };

const char* to_string(SolveStatus s);

struct SolveStats {
  std::uint64_t qp_count = 0;   ///< sequence QPs solved
  std::uint64_t iterations = 0; ///< active-set pivots or ADMM iterations
  double wall_time = 0.0;       ///< seconds
};

struct Solution {
  Trajectory trajectory;
  double cost = 0.0;
  SwitchSequence sigma;
  std::set<int> events;  ///< derived zero-input time set
  SolveStatus status = SolveStatus::Infeasible;
  SolveStats stats;
  double max_violation = 0.0;  ///< phase-1 certificate when Infeasible
  /// The sequence QP had a solution, whether or not it survived the strict
  /// trigger-rule validation. Set by solve_for_sequence; drives the
  /// enumeration's feasible bookkeeping.
  bool qp_feasible = false;
};

}  // namespace etlq
