#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace etlq {

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bunch-Kaufman LDL^T factorization of a dense symmetric (possibly
/// indefinite) matrix, reusable across right-hand sides. Factor once, solve
/// many times; this is the cache behind the ADMM half-step.
class KktCache {
 public:
  /// Throws SingularMatrixError when a pivot underflows pivot_tol relative
  /// to the matrix magnitude.
  static KktCache factorize(const Eigen::MatrixXd& M, double pivot_tol = 1e-12);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int size() const { return static_cast<int>(f_.rows()); }

 private:
  KktCache() = default;
  Eigen::MatrixXd f_;      ///< packed L (unit lower) and block-diagonal D
  std::vector<int> ipiv_;  ///< pivot bookkeeping, LAPACK-style
};

inline KktCache kkt_factorize(const Eigen::MatrixXd& M, double pivot_tol = 1e-12) {
  return KktCache::factorize(M, pivot_tol);
}

inline Eigen::VectorXd kkt_solve(const KktCache& cache, const Eigen::VectorXd& rhs) {
  return cache.solve(rhs);
}

}  // namespace etlq
