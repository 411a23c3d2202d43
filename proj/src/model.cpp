#include "etlq/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace etlq {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NoConvergence: return "NoConvergence";
  }
  return "?";
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double min_eigenvalue_sym(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

void validate_instance(const ProblemInstance& inst, const Tolerances& tol) {
  const int n = inst.n();
  const int m = inst.m();
  require(n >= 1, "A must be at least 1x1");
  require(inst.A.rows() == n && inst.A.cols() == n, "A must be square");
  require(inst.B.rows() == n, "B row count must match A");
  require(m >= 1, "B must have at least one column");
  require(inst.Q.rows() == n && inst.Q.cols() == n, "Q must be n x n");
  require(inst.P.rows() == n && inst.P.cols() == n, "P must be n x n");
  require(inst.R.rows() == m && inst.R.cols() == m, "R must be m x m");
  require(inst.x0.size() == n, "x0 must have length n");
  require(inst.eps > 0.0, "eps must be positive");
  require(inst.N >= 1, "N must be at least 1");

  auto sym_err = [](const Eigen::MatrixXd& M) {
    return (M - M.transpose()).cwiseAbs().maxCoeff();
  };
  require(sym_err(inst.Q) <= 1e-12 * (1.0 + inst.Q.cwiseAbs().maxCoeff()),
          "Q must be symmetric");
  require(sym_err(inst.P) <= 1e-12 * (1.0 + inst.P.cwiseAbs().maxCoeff()),
          "P must be symmetric");
  require(sym_err(inst.R) <= 1e-12 * (1.0 + inst.R.cwiseAbs().maxCoeff()),
          "R must be symmetric");
  require(min_eigenvalue_sym(inst.Q) >= -tol.psd, "Q must be PSD");
  require(min_eigenvalue_sym(inst.P) >= -tol.psd, "P must be PSD");
  require(min_eigenvalue_sym(inst.R) > tol.pd, "R must be PD");
}

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     double rank_tol) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int k = 0; k < n; ++k) {
    const std::complex<double> lam = es.eigenvalues()[k];
    if (std::abs(lam) < 1.0) continue;  // stable modes need no control
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh << (lam * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>()),
        B.cast<std::complex<double>>();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(pbh);
    qr.setThreshold(rank_tol);
    if (qr.rank() < n) return false;
  }
  return true;
}

RegionSet build_regions(int n, double eps) {
  if (n < 1) throw std::invalid_argument("build_regions: n must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("build_regions: eps must be positive");

  RegionSet rs;
  rs.n = n;
  rs.eps = eps;
  rs.regions.reserve(2 * n);
  for (int sign_block = 0; sign_block < 2; ++sign_block) {
    const double s = sign_block == 0 ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      Region r;
      r.T = Eigen::MatrixXd::Zero(2 * n - 1, n);
      r.d = Eigen::VectorXd::Zero(2 * n - 1);
      int row = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        // s*x_i >= x_j  and  s*x_i >= -x_j
        r.T(row, j) = 1.0;
        r.T(row, i) = -s;
        ++row;
        r.T(row, j) = -1.0;
        r.T(row, i) = -s;
        ++row;
      }
      r.T(row, i) = -s;  // s*x_i >= eps
      r.d(row) = -eps;
      rs.regions.push_back(std::move(r));
    }
  }
  return rs;
}

int classify(const Eigen::VectorXd& x, const RegionSet& rs,
             const Tolerances& tol) {
  if (x.lpNorm<Eigen::Infinity>() < rs.eps) return 0;
  for (int p = 1; p <= 2 * rs.n; ++p) {
    const Region& r = rs.regions[p - 1];
    if (((r.T * x - r.d).array() <= tol.mem).all()) return p;
  }
  // Unreachable for a well-formed partition; the dominant coordinate's cone
  // always matches. Guard against NaN input.
  throw std::runtime_error("classify: point matched no region (non-finite input?)");
}

Trajectory simulate(const ProblemInstance& inst,
                    const std::vector<Eigen::VectorXd>& inputs) {
  if (static_cast<int>(inputs.size()) != inst.N)
    throw std::invalid_argument("simulate: need exactly N inputs");
  Trajectory traj;
  traj.states.reserve(inst.N + 1);
  traj.inputs.reserve(inst.N);
  traj.states.push_back(inst.x0);
  for (int t = 0; t < inst.N; ++t) {
    if (inputs[t].size() != inst.m())
      throw std::invalid_argument("simulate: input dimension mismatch");
    traj.inputs.push_back(inputs[t]);
    traj.states.push_back(inst.A * traj.states.back() + inst.B * inputs[t]);
  }
  return traj;
}

double evaluate_cost(const ProblemInstance& inst, const Trajectory& traj) {
  double J = traj.states[inst.N].dot(inst.P * traj.states[inst.N]);
  for (int t = 0; t < inst.N; ++t) {
    J += traj.states[t].dot(inst.Q * traj.states[t]);
    J += traj.inputs[t].dot(inst.R * traj.inputs[t]);
  }
  return J;
}

std::pair<bool, std::vector<int>> check_trigger_consistency(
    const ProblemInstance& inst, const Trajectory& traj,
    const Tolerances& tol) {
  std::vector<int> bad;
  for (int t = 0; t < inst.N; ++t) {
    if (traj.states[t].lpNorm<Eigen::Infinity>() < inst.eps - tol.strict &&
        traj.inputs[t].lpNorm<Eigen::Infinity>() > tol.zero) {
      bad.push_back(t);
    }
  }
  return {bad.empty(), bad};
}

bool validate_schedule(const ProblemInstance& inst, const Trajectory& traj,
                       const SwitchSequence& sigma, const RegionSet& rs,
                       const Tolerances& tol) {
  // t = 0 is the given initial state; sigma(0) = classify(x0) is a
  // precondition of the sequence QP, not something the solver chose.
  for (int t = 1; t < inst.N; ++t) {
    const Eigen::VectorXd& x = traj.states[t];
    if (sigma[t] == 0) {
      // The QP shrinks the box by tol.strict, so its solutions clear this
      // with half the margin to spare; anything hugging or crossing the true
      // boundary is schedule-inconsistent (the trigger rule is strict).
      if (x.lpNorm<Eigen::Infinity>() >= inst.eps - 0.5 * tol.strict)
        return false;
    } else {
      const Region& r = rs.regions[sigma[t] - 1];
      if (!(((r.T * x - r.d).array() <= tol.mem).all())) return false;
    }
  }
  return check_trigger_consistency(inst, traj, tol).first;
}

}  // namespace etlq
