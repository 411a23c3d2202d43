#include "etlq/greedy.hpp"

#include <chrono>
#include <limits>

#include "etlq/exact.hpp"
#include "etlq/model.hpp"
#include "etlq/parallel.hpp"
#include "etlq/qp.hpp"

namespace etlq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cost of the step-k subproblem under the candidate schedule, or +inf when
/// it has no admissible solution.
double candidate_cost(const ProblemInstance& inst, const RegionSet& rs,
                      const SwitchSequence& sigma, GreedyOptions::Tail tail,
                      const Tolerances& tol, std::uint64_t& pivots) {
  const int k = static_cast<int>(sigma.size());
  if (tail == GreedyOptions::Tail::Truncated) {
    Solution sol = solve_for_sequence(inst.truncated(k), sigma, rs, tol);
    pivots += sol.stats.iterations;
    return sol.status == SolveStatus::Feasible ? sol.cost : kInf;
  }
  // Free tail: full horizon, constraints only through step k-1. No schedule
  // validation here; the tail states carry no labels yet.
  SequenceQp sq = build_sequence_qp(inst, sigma, rs, tol);
  QpResult qr = solve_qp(sq.qp, std::nullopt, tol);
  pivots += static_cast<std::uint64_t>(qr.pivots);
  if (qr.status != QpStatus::Optimal) return kInf;
  return qr.objective + sq.cost_constant;
}

}  // namespace

Solution solve_greedy(const ProblemInstance& inst, const GreedyOptions& opts,
                      const Tolerances& tol) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_instance(inst, tol);
  const RegionSet rs = build_regions(inst.n(), inst.eps);
  const int labels = rs.label_count();

  SwitchSequence sigma{classify(inst.x0, rs, tol)};
  std::uint64_t qp_count = 0;
  std::uint64_t pivots = 0;

  for (int k = 2; k <= inst.N; ++k) {
    std::vector<double> costs(labels, kInf);
    std::vector<std::uint64_t> cand_pivots(labels, 0);
    parallel_chunks(labels, opts.workers,
                    [&](int, std::uint64_t b, std::uint64_t e) {
      for (std::uint64_t p = b; p < e; ++p) {
        SwitchSequence cand = sigma;
        cand.push_back(static_cast<int>(p));
        costs[p] = candidate_cost(inst, rs, cand, opts.tail, tol,
                                  cand_pivots[p]);
      }
    });
    qp_count += labels;
    for (auto pv : cand_pivots) pivots += pv;

    double best = kInf;
    for (double c : costs) best = std::min(best, c);
    if (best == kInf) {
      Solution sol;
      sol.sigma = sigma;
      sol.status = SolveStatus::Infeasible;
      sol.stats.qp_count = qp_count;
      sol.stats.iterations = pivots;
      sol.stats.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      return sol;
    }
    int pick = 0;
    const double window = tol.cost_window(best);
    while (costs[pick] > best + window) ++pick;  // lowest label within ties
    sigma.push_back(pick);
  }

  Solution sol = solve_for_sequence(inst, sigma, rs, tol);
  sol.stats.qp_count = qp_count + 1;
  sol.stats.iterations = pivots + sol.stats.iterations;
  sol.stats.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return sol;
}

}  // namespace etlq
