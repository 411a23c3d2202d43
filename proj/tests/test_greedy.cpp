#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "etlq/exact.hpp"
#include "etlq/greedy.hpp"
#include "etlq/model.hpp"
#include "etlq/rng.hpp"
#include "support/instances.hpp"

using namespace etlq;
using testing::second_order_instance;

TEST_CASE("greedy budget is (2n+1)(N-1) subproblems plus the final solve") {
  ProblemInstance inst = second_order_instance();
  Solution g = solve_greedy(inst);
  REQUIRE(g.status == SolveStatus::Feasible);
  CHECK(g.stats.qp_count == 5 * 6 + 1);
  CHECK(check_trigger_consistency(inst, g.trajectory).first);
}

TEST_CASE("greedy never undercuts the exact optimum") {
  ProblemInstance inst = second_order_instance();
  EnumerationReport exact = solve_exact(inst);
  Solution g = solve_greedy(inst);
  REQUIRE(g.status == SolveStatus::Feasible);
  CHECK(g.cost >= exact.best.cost - 1e-9);

  SUBCASE("and the same holds on perturbed initial states") {
    Rng rng(6);
    for (int it = 0; it < 6; ++it) {
      ProblemInstance p = inst;
      p.N = 5;
      p.x0 = rng.gaussian_vector(2);
      Solution gr = solve_greedy(p);
      CHECK(gr.status != SolveStatus::NoConvergence);
      if (gr.status != SolveStatus::Feasible) continue;
      EnumerationReport ex = solve_exact(p);
      REQUIRE(ex.best.status == SolveStatus::Optimal);
      CHECK(gr.cost >= ex.best.cost - 1e-9 * std::max(1.0, ex.best.cost));
      CHECK(check_trigger_consistency(p, gr.trajectory).first);
    }
  }
}

TEST_CASE("single-step greedy is one solve") {
  ProblemInstance inst = second_order_instance();
  inst.N = 1;
  Solution g = solve_greedy(inst);
  REQUIRE(g.status == SolveStatus::Feasible);
  CHECK(g.stats.qp_count == 1);
  EnumerationReport ex = solve_exact(inst);
  CHECK(g.cost == ex.best.cost);
}

TEST_CASE("repeated greedy runs are bit-identical") {
  ProblemInstance inst = second_order_instance();
  Solution a = solve_greedy(inst);
  Solution b = solve_greedy(inst);
  CHECK(a.cost == b.cost);
  CHECK(a.sigma == b.sigma);
  CHECK(a.stats.qp_count == b.stats.qp_count);

  GreedyOptions two_workers;
  two_workers.workers = 2;
  Solution c = solve_greedy(inst, two_workers);
  CHECK(a.cost == c.cost);
  CHECK(a.sigma == c.sigma);
}

TEST_CASE("free-tail variant also returns an admissible schedule") {
  ProblemInstance inst = second_order_instance();
  GreedyOptions opts;
  opts.tail = GreedyOptions::Tail::FreeTail;
  Solution g = solve_greedy(inst, opts);
  REQUIRE(g.status == SolveStatus::Feasible);
  CHECK(check_trigger_consistency(inst, g.trajectory).first);
  EnumerationReport ex = solve_exact(inst);
  CHECK(g.cost >= ex.best.cost - 1e-9);
}
