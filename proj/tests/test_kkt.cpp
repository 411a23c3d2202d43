#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "etlq/kkt.hpp"
#include "etlq/rng.hpp"
#include "etlq/tolerances.hpp"

using namespace etlq;

TEST_CASE("identity solves are exact") {
  KktCache c = kkt_factorize(Eigen::MatrixXd::Identity(5, 5));
  Eigen::VectorXd rhs(5);
  rhs << 1, -2, 3, -4, 5;
  CHECK((kkt_solve(c, rhs) - rhs).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("zero-diagonal blocks force 2x2 pivots") {
  Eigen::MatrixXd M(2, 2);
  M << 0, 1, 1, 0;
  KktCache c = kkt_factorize(M);
  Eigen::VectorXd rhs(2);
  rhs << 1, 2;
  Eigen::VectorXd y = kkt_solve(c, rhs);
  CHECK(y[0] == doctest::Approx(2.0));
  CHECK(y[1] == doctest::Approx(1.0));
}

TEST_CASE("random SPD systems solve within the linear tolerance") {
  Tolerances tol;
  Rng rng(11);
  Eigen::MatrixXd L(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) L(i, j) = rng.gaussian();
  Eigen::MatrixXd M = L * L.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
  KktCache c = kkt_factorize(M);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd rhs = rng.gaussian_vector(20);
    Eigen::VectorXd y = kkt_solve(c, rhs);
    CHECK((M * y - rhs).lpNorm<Eigen::Infinity>() <=
          tol.lin * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("saddle-point systems are handled") {
  // [H A'; A 0] with H PD: indefinite, needs real pivoting.
  Tolerances tol;
  Rng rng(5);
  const int d = 8, e = 3;
  Eigen::MatrixXd Hl(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) Hl(i, j) = rng.gaussian();
  Eigen::MatrixXd H = Hl * Hl.transpose() + Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd A(e, d);
  for (int i = 0; i < e; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = rng.gaussian();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d + e, d + e);
  M.topLeftCorner(d, d) = H;
  M.topRightCorner(d, e) = A.transpose();
  M.bottomLeftCorner(e, d) = A;

  KktCache c = kkt_factorize(M);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd rhs = rng.gaussian_vector(d + e);
    Eigen::VectorXd y = kkt_solve(c, rhs);
    CHECK((M * y - rhs).lpNorm<Eigen::Infinity>() <=
          tol.lin * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("singular matrices are rejected") {
  CHECK_THROWS_AS(kkt_factorize(Eigen::MatrixXd::Zero(3, 3)),
                  SingularMatrixError);
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 1, 1;
  CHECK_THROWS_AS(kkt_factorize(M), SingularMatrixError);
}

TEST_CASE("factorization is reusable across many right-hand sides") {
  Rng rng(99);
  const int d = 23;
  Eigen::MatrixXd Fl(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) Fl(i, j) = rng.gaussian();
  Eigen::MatrixXd M = Fl * Fl.transpose() + 4.8 * Eigen::MatrixXd::Identity(d, d);
  KktCache c = kkt_factorize(M);
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    Eigen::VectorXd rhs = rng.gaussian_vector(d);
    worst = std::max(worst, (M * kkt_solve(c, rhs) - rhs).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 1e-8);
}
