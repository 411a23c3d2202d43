#include "etlq/lqr.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace etlq {

FiniteLqr finite_horizon_lqr(const ProblemInstance& inst) {
  const int N = inst.N;
  FiniteLqr out;
  out.cost_to_go.assign(N + 1, Eigen::MatrixXd());
  out.gains.assign(N, Eigen::MatrixXd());
  out.cost_to_go[N] = inst.P;
  for (int t = N - 1; t >= 0; --t) {
    const Eigen::MatrixXd& Pn = out.cost_to_go[t + 1];
    Eigen::MatrixXd S = inst.R + inst.B.transpose() * Pn * inst.B;
    Eigen::MatrixXd K = -S.llt().solve(inst.B.transpose() * Pn * inst.A);
    Eigen::MatrixXd Acl = inst.A + inst.B * K;
    out.gains[t] = K;
    out.cost_to_go[t] = inst.Q + K.transpose() * inst.R * K +
                        Acl.transpose() * Pn * Acl;
    // Symmetrize against roundoff drift.
    out.cost_to_go[t] = 0.5 * (out.cost_to_go[t] + out.cost_to_go[t].transpose());
  }
  out.cost = inst.x0.dot(out.cost_to_go[0] * inst.x0);

  out.trajectory.states.push_back(inst.x0);
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd u = out.gains[t] * out.trajectory.states.back();
    out.trajectory.inputs.push_back(u);
    out.trajectory.states.push_back(inst.A * out.trajectory.states.back() +
                                    inst.B * u);
  }
  return out;
}

Eigen::MatrixXd dare_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                          double tol, int max_iter) {
  Eigen::MatrixXd P = Q;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd S = R + B.transpose() * P * B;
    Eigen::MatrixXd K = S.llt().solve(B.transpose() * P * A);
    Eigen::MatrixXd Pn = Q + A.transpose() * P * (A - B * K);
    Pn = 0.5 * (Pn + Pn.transpose());
    const double delta = (Pn - P).cwiseAbs().maxCoeff();
    P = Pn;
    if (delta <= tol * (1.0 + P.cwiseAbs().maxCoeff())) {
      Eigen::MatrixXd Sf = R + B.transpose() * P * B;
      return -Sf.llt().solve(B.transpose() * P * A);
    }
  }
  throw std::runtime_error("dare_gain: Riccati iteration did not converge "
                           "(is (A,B) stabilizable and (A,Q) detectable?)");
}

}  // namespace etlq
