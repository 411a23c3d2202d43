#include "etlq/kkt.hpp"

#include <cmath>

namespace etlq {

// Bunch-Kaufman partial pivoting on the lower triangle, following the
// classic reference algorithm: 1x1 and 2x2 pivots, symmetric interchanges.
KktCache KktCache::factorize(const Eigen::MatrixXd& M, double pivot_tol) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw std::invalid_argument("kkt_factorize: matrix must be square");
  KktCache cache;
  cache.f_ = M;
  cache.ipiv_.assign(n, 0);
  Eigen::MatrixXd& a = cache.f_;

  const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double tiny = pivot_tol * scale;

  int k = 0;
  while (k < n) {
    int kstep = 1;
    int kp = k;
    const double absakk = std::abs(a(k, k));

    int imax = k;
    double colmax = 0.0;
    if (k < n - 1) {
      a.col(k).segment(k + 1, n - k - 1).cwiseAbs().maxCoeff(&imax);
      imax += k + 1;
      colmax = std::abs(a(imax, k));
    }

    if (std::max(absakk, colmax) <= tiny)
      throw SingularMatrixError("kkt_factorize: pivot underflow (singular matrix)");

    if (absakk >= alpha * colmax) {
      kp = k;
    } else {
      double rowmax = 0.0;
      for (int j = k; j < imax; ++j) rowmax = std::max(rowmax, std::abs(a(imax, j)));
      for (int i = imax + 1; i < n; ++i) rowmax = std::max(rowmax, std::abs(a(i, imax)));
      if (absakk >= alpha * colmax * (colmax / rowmax)) {
        kp = k;
      } else if (std::abs(a(imax, imax)) >= alpha * rowmax) {
        kp = imax;
      } else {
        kp = imax;
        kstep = 2;
      }
    }

    const int kk = k + kstep - 1;
    if (kp != kk) {
      // Symmetric interchange of rows/columns kk and kp (kp > kk).
      for (int i = kp + 1; i < n; ++i) std::swap(a(i, kk), a(i, kp));
      for (int j = kk + 1; j < kp; ++j) std::swap(a(j, kk), a(kp, j));
      std::swap(a(kk, kk), a(kp, kp));
      if (kstep == 2) std::swap(a(k + 1, k), a(kp, k));
    }

    if (kstep == 1) {
      if (std::abs(a(k, k)) <= tiny)
        throw SingularMatrixError("kkt_factorize: pivot underflow (singular matrix)");
      const double d11 = 1.0 / a(k, k);
      for (int j = k + 1; j < n; ++j) {
        const double wj = a(j, k);
        if (wj != 0.0)
          for (int i = j; i < n; ++i) a(i, j) -= d11 * wj * a(i, k);
      }
      a.col(k).segment(k + 1, n - k - 1) *= d11;
      cache.ipiv_[k] = kp;
    } else {
      if (k < n - 2) {
        const double d21 = a(k + 1, k);
        if (std::abs(d21) <= tiny)
          throw SingularMatrixError("kkt_factorize: pivot underflow (singular matrix)");
        const double d11 = a(k + 1, k + 1) / d21;
        const double d22 = a(k, k) / d21;
        const double t = 1.0 / (d11 * d22 - 1.0);
        const double d21i = t / d21;
        for (int j = k + 2; j < n; ++j) {
          const double wk = d21i * (d11 * a(j, k) - a(j, k + 1));
          const double wkp1 = d21i * (d22 * a(j, k + 1) - a(j, k));
          for (int i = j; i < n; ++i)
            a(i, j) -= a(i, k) * wk + a(i, k + 1) * wkp1;
          a(j, k) = wk;
          a(j, k + 1) = wkp1;
        }
      }
      cache.ipiv_[k] = -(kp + 1);
      cache.ipiv_[k + 1] = -(kp + 1);
    }
    k += kstep;
  }
  return cache;
}

Eigen::VectorXd KktCache::solve(const Eigen::VectorXd& rhs) const {
  const int n = size();
  if (rhs.size() != n) throw std::invalid_argument("kkt_solve: rhs size mismatch");
  const Eigen::MatrixXd& a = f_;
  Eigen::VectorXd b = rhs;

  // Forward: inv(L) * P' * b, with the block-diagonal solve fused in.
  int k = 0;
  while (k < n) {
    if (ipiv_[k] >= 0) {
      const int kp = ipiv_[k];
      if (kp != k) std::swap(b[k], b[kp]);
      if (k < n - 1)
        b.segment(k + 1, n - k - 1).noalias() -= a.col(k).segment(k + 1, n - k - 1) * b[k];
      b[k] /= a(k, k);
      ++k;
    } else {
      const int kp = -ipiv_[k] - 1;
      if (kp != k + 1) std::swap(b[k + 1], b[kp]);
      if (k < n - 2) {
        b.segment(k + 2, n - k - 2).noalias() -= a.col(k).segment(k + 2, n - k - 2) * b[k];
        b.segment(k + 2, n - k - 2).noalias() -= a.col(k + 1).segment(k + 2, n - k - 2) * b[k + 1];
      }
      const double akm1k = a(k + 1, k);
      const double akm1 = a(k, k) / akm1k;
      const double ak = a(k + 1, k + 1) / akm1k;
      const double denom = akm1 * ak - 1.0;
      const double bkm1 = b[k] / akm1k;
      const double bk = b[k + 1] / akm1k;
      b[k] = (ak * bkm1 - bk) / denom;
      b[k + 1] = (akm1 * bk - bkm1) / denom;
      k += 2;
    }
  }

  // Backward: inv(L') with the interchanges undone on the way out.
  k = n - 1;
  while (k >= 0) {
    if (ipiv_[k] >= 0) {
      if (k < n - 1)
        b[k] -= a.col(k).segment(k + 1, n - k - 1).dot(b.segment(k + 1, n - k - 1));
      const int kp = ipiv_[k];
      if (kp != k) std::swap(b[k], b[kp]);
      --k;
    } else {
      if (k < n - 1) {
        b[k] -= a.col(k).segment(k + 1, n - k - 1).dot(b.segment(k + 1, n - k - 1));
        b[k - 1] -= a.col(k - 1).segment(k + 1, n - k - 1).dot(b.segment(k + 1, n - k - 1));
      }
      const int kp = -ipiv_[k] - 1;
      if (kp != k) std::swap(b[k], b[kp]);
      k -= 2;
    }
  }
  return b;
}

}  // namespace etlq
