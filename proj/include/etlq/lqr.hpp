#pragma once

#include <Eigen/Core>

#include <vector>

#include "etlq/types.hpp"

namespace etlq {

/// Finite-horizon LQR solution of the unconstrained problem (no trigger).
struct FiniteLqr {
  std::vector<Eigen::MatrixXd> gains;       ///< K_t, u(t) = K_t x(t), t = 0..N-1
  std::vector<Eigen::MatrixXd> cost_to_go;  ///< P_t, t = 0..N (P_N = terminal)
  double cost = 0.0;                        ///< x0' P_0 x0
  Trajectory trajectory;                    ///< closed-loop rollout from x0
};

/// Backward Riccati recursion with terminal weight inst.P, then a forward
/// rollout from inst.x0.
FiniteLqr finite_horizon_lqr(const ProblemInstance& inst);

/// Infinite-horizon discrete LQR gain K (u = Kx) for (A, B, Q, R), via
/// fixed-point iteration on the algebraic Riccati equation.
Eigen::MatrixXd dare_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                          double tol = 1e-13, int max_iter = 200000);

}  // namespace etlq
