#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "etlq/model.hpp"
#include "etlq/qp.hpp"
#include "etlq/rng.hpp"
#include "support/oracles.hpp"

using namespace etlq;

namespace {

ProblemInstance example_second_order() {
  ProblemInstance inst;
  inst.A.resize(2, 2);
  inst.A << 0.9, 0.2, 0.8, 1.5;
  inst.B.resize(2, 1);
  inst.B << 0.6, 0.8;
  inst.Q = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  inst.R = Eigen::MatrixXd::Constant(1, 1, 5.0);
  inst.P = inst.Q;
  inst.x0.resize(2);
  inst.x0 << 0.0, -1.0;
  inst.eps = 0.25;
  inst.N = 7;
  return inst;
}

QpProblem random_strictly_feasible(Rng& rng, int d, int e, int ni) {
  QpProblem p;
  Eigen::MatrixXd L(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) L(i, j) = rng.gaussian();
  p.H = L * L.transpose() + Eigen::MatrixXd::Identity(d, d);
  p.g = rng.gaussian_vector(d);
  Eigen::VectorXd anchor = rng.gaussian_vector(d);
  p.A_eq.resize(e, d);
  for (int i = 0; i < e; ++i)
    for (int j = 0; j < d; ++j) p.A_eq(i, j) = rng.gaussian();
  p.b_eq = p.A_eq * anchor;
  p.A_in.resize(ni, d);
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < d; ++j) p.A_in(i, j) = rng.gaussian();
  p.b_in = p.A_in * anchor;
  for (int i = 0; i < ni; ++i) p.b_in[i] += 0.1 + rng.uniform();
  return p;
}

}  // namespace

TEST_CASE("halfspace projection") {
  QpProblem p;
  p.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Zero(2);
  p.A_eq.resize(0, 2);
  p.b_eq.resize(0);
  p.A_in.resize(1, 2);
  p.A_in << 1.0, 0.0;
  p.b_in = Eigen::VectorXd::Constant(1, -1.0);

  QpResult r = solve_qp(p);
  REQUIRE(r.status == QpStatus::Optimal);
  CHECK(r.z[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.z[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.kkt_residual <= 1e-6);
  REQUIRE(r.active_set.size() == 1);
  CHECK(r.active_set[0] == 0);
  CHECK(r.mult_in[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("unconstrained solves hit stationarity") {
  Rng rng(2);
  QpProblem p = random_strictly_feasible(rng, 6, 0, 0);
  p.A_in.resize(0, 6);
  p.b_in.resize(0);
  QpResult r = solve_qp(p);
  REQUIRE(r.status == QpStatus::Optimal);
  CHECK((p.H * r.z + p.g).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("certified infeasibility with a max-violation value") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(1, 1);
  p.g = Eigen::VectorXd::Zero(1);
  p.A_eq.resize(0, 1);
  p.b_eq.resize(0);
  p.A_in.resize(2, 1);
  p.A_in << 1.0, -1.0;  // x <= -1 and -x <= -1
  p.b_in = Eigen::VectorXd::Constant(2, -1.0);

  QpResult r = solve_qp(p);
  REQUIRE(r.status == QpStatus::Infeasible);
  CHECK(r.max_violation == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.phase1_used);
}

TEST_CASE("inconsistent equalities are infeasible") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Zero(2);
  p.A_eq.resize(2, 2);
  p.A_eq << 1.0, 1.0, 2.0, 2.0;
  p.b_eq.resize(2);
  p.b_eq << 1.0, 3.0;  // parallel, contradictory
  p.A_in.resize(0, 2);
  p.b_in.resize(0);
  QpResult r = solve_qp(p);
  CHECK(r.status == QpStatus::Infeasible);
  CHECK(r.max_violation > 0.1);
}

TEST_CASE("matches the first-order reference on random instances") {
  Rng rng(31);
  int checked = 0;
  for (int it = 0; it < 40; ++it) {
    const int d = 3 + static_cast<int>(rng.uniform() * 9.0);  // 3..11
    const int e = it % 3 == 0 ? 1 + (it % 2) : 0;
    const int ni = 2 + static_cast<int>(rng.uniform() * 10.0);
    QpProblem p = random_strictly_feasible(rng, d, std::min(e, d - 1), ni);
    QpResult r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.kkt_residual <= 1e-6);

    testing::PgResult ref = testing::projected_gradient_qp(p);
    if (!ref.converged) continue;  // reference ran out of budget; skip
    ++checked;
    const double denom = std::max(1.0, std::abs(ref.objective));
    CHECK(std::abs(r.objective - ref.objective) / denom <= 1e-5);
  }
  CHECK(checked >= 30);
}

TEST_CASE("adding an inequality row never improves the optimum") {
  Rng rng(17);
  for (int it = 0; it < 25; ++it) {
    const int d = 4 + (it % 5);
    QpProblem p = random_strictly_feasible(rng, d, 0, 6);
    QpResult base = solve_qp(p);
    REQUIRE(base.status == QpStatus::Optimal);

    QpProblem tight = p;
    tight.A_in.conservativeResize(7, d);
    tight.b_in.conservativeResize(7);
    for (int j = 0; j < d; ++j) tight.A_in(6, j) = rng.gaussian();
    tight.b_in[6] = tight.A_in.row(6).dot(base.z) - 0.5;  // cuts the optimum
    QpResult cut = solve_qp(tight);
    if (cut.status != QpStatus::Optimal) continue;  // may become infeasible
    CHECK(cut.objective >= base.objective - 1e-9);
  }
}

TEST_CASE("warm starts change pivots, not the answer") {
  Rng rng(23);
  for (int it = 0; it < 20; ++it) {
    QpProblem p = random_strictly_feasible(rng, 8, 2, 10);
    QpResult cold = solve_qp(p);
    REQUIRE(cold.status == QpStatus::Optimal);
    QpResult warm = solve_qp(p, cold.z);
    REQUIRE(warm.status == QpStatus::Optimal);
    CHECK(std::abs(warm.objective - cold.objective) <=
          1e-6 * std::max(1.0, std::abs(cold.objective)));
  }
}

TEST_CASE("sequence QP shapes for the planar example") {
  ProblemInstance inst = example_second_order();
  RegionSet rs = build_regions(2, inst.eps);
  SwitchSequence sigma{4, 4, 4, 1, 1, 0, 0};

  SequenceQp sq = build_sequence_qp(inst, sigma, rs);
  CHECK(sq.qp.dim() == 19);  // 14 states + 5 free inputs
  CHECK(sq.free_inputs == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(sq.qp.eq_count() == 14);
  // steps 1..4 carry 3 region rows each, steps 5..6 the 4 box rows
  CHECK(sq.qp.in_count() == 4 * 3 + 2 * 4);
  CHECK(sq.cost_constant == doctest::Approx(2.0));

  SUBCASE("solving it yields a feasible point of every row") {
    QpResult r = solve_qp(sq.qp);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK((sq.qp.A_eq * r.z - sq.qp.b_eq).lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK((sq.qp.A_in * r.z - sq.qp.b_in).maxCoeff() <= 1e-7);
  }
}

TEST_CASE("one-step sequence QP reduces to the single-period feedback") {
  ProblemInstance inst = example_second_order();
  inst.N = 1;
  RegionSet rs = build_regions(2, inst.eps);
  SwitchSequence sigma{classify(inst.x0, rs)};
  REQUIRE(sigma[0] == 4);

  SequenceQp sq = build_sequence_qp(inst, sigma, rs);
  CHECK(sq.qp.dim() == 3);  // x(1) and u(0)
  CHECK(sq.qp.in_count() == 0);
  QpResult r = solve_qp(sq.qp);
  REQUIRE(r.status == QpStatus::Optimal);

  const Eigen::MatrixXd S = inst.R + inst.B.transpose() * inst.P * inst.B;
  const Eigen::VectorXd u_expect =
      -S.llt().solve(inst.B.transpose() * inst.P * inst.A * inst.x0);
  CHECK(std::abs(r.z[sq.input_offset(0)] - u_expect[0]) <= 1e-9);
}

TEST_CASE("zero-label steps eliminate their inputs") {
  ProblemInstance inst = example_second_order();
  inst.x0 << 0.1, -0.05;  // inside the box
  RegionSet rs = build_regions(2, inst.eps);
  SwitchSequence sigma{0, 4, 4, 1, 1, 0, 0};
  SequenceQp sq = build_sequence_qp(inst, sigma, rs);
  CHECK(sq.free_inputs == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("schedule must start at the initial state's own label") {
  ProblemInstance inst = example_second_order();
  RegionSet rs = build_regions(2, inst.eps);
  SwitchSequence sigma{1, 4, 4, 1, 1, 0, 0};  // x0 sits in region 4
  CHECK_THROWS_AS(build_sequence_qp(inst, sigma, rs), std::invalid_argument);
}

TEST_CASE("prefix schedules leave the tail unconstrained") {
  ProblemInstance inst = example_second_order();
  RegionSet rs = build_regions(2, inst.eps);
  SwitchSequence prefix{4, 4};
  SequenceQp sq = build_sequence_qp(inst, prefix, rs);
  CHECK(sq.qp.dim() == 14 + 7);            // all inputs stay free
  CHECK(sq.qp.in_count() == 3);            // only step 1 is constrained
  QpResult r = solve_qp(sq.qp);
  CHECK(r.status == QpStatus::Optimal);
}
