#include "etlq/exact.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "etlq/model.hpp"
#include "etlq/parallel.hpp"

namespace etlq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// Total-order comparison used for the reduction: cost first, then rank.
/// Exact on doubles, hence associative and partition-independent.
bool better(double cost_a, std::uint64_t rank_a, double cost_b,
            std::uint64_t rank_b) {
  if (cost_a != cost_b) return cost_a < cost_b;
  return rank_a < rank_b;
}

/// Per-chunk reduction state. Merging two accumulators is associative, so
/// the final result does not depend on how the rank range was partitioned.
struct Accumulator {
  std::uint64_t feasible = 0;
  std::uint64_t infeasible = 0;
  std::uint64_t schedule_rejected = 0;
  std::uint64_t nonconverged = 0;
  std::uint64_t qp_count = 0;
  std::uint64_t pivots = 0;
  bool has_best = false;
  double best_cost = kInf;
  std::uint64_t best_rank = 0;
  Solution best_solution;
  /// Feasible (cost, rank) pairs with cost <= best_cost + window(best_cost);
  /// superset of the global tie window by monotonicity of the window.
  std::vector<std::pair<double, std::uint64_t>> near_ties;

  void note_candidate(double cost, std::uint64_t rank, Solution&& sol,
                      const Tolerances& tol) {
    if (!has_best || better(cost, rank, best_cost, best_rank)) {
      has_best = true;
      best_cost = cost;
      best_rank = rank;
      best_solution = std::move(sol);
      const double window = tol.cost_window(best_cost);
      std::erase_if(near_ties, [&](const auto& pr) {
        return pr.first > best_cost + window;
      });
    }
    if (cost <= best_cost + tol.cost_window(best_cost))
      near_ties.emplace_back(cost, rank);
  }

  void merge(Accumulator&& other, const Tolerances& tol) {
    feasible += other.feasible;
    infeasible += other.infeasible;
    schedule_rejected += other.schedule_rejected;
    nonconverged += other.nonconverged;
    qp_count += other.qp_count;
    pivots += other.pivots;
    if (other.has_best &&
        (!has_best ||
         better(other.best_cost, other.best_rank, best_cost, best_rank))) {
      has_best = true;
      best_cost = other.best_cost;
      best_rank = other.best_rank;
      best_solution = std::move(other.best_solution);
    }
    near_ties.insert(near_ties.end(), other.near_ties.begin(),
                     other.near_ties.end());
    if (has_best) {
      const double window = tol.cost_window(best_cost);
      std::erase_if(near_ties, [&](const auto& pr) {
        return pr.first > best_cost + window;
      });
    }
  }
};

}  // namespace

std::uint64_t sequence_count(int n, int N) {
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(n) + 1;
  std::uint64_t total = 1;
  for (int t = 0; t < N - 1; ++t) {
    if (total > (std::uint64_t{1} << 62) / base)
      throw std::overflow_error("sequence_count: enumeration too large");
    total *= base;
  }
  return total;
}

SwitchSequence sigma_from_rank(std::uint64_t rank, int base, int N,
                               int sigma0) {
  SwitchSequence sigma(N);
  sigma[0] = sigma0;
  for (int t = N - 1; t >= 1; --t) {
    sigma[t] = static_cast<int>(rank % base);
    rank /= base;
  }
  return sigma;
}

std::uint64_t rank_from_sigma(const SwitchSequence& sigma, int base) {
  std::uint64_t rank = 0;
  for (std::size_t t = 1; t < sigma.size(); ++t)
    rank = rank * base + static_cast<std::uint64_t>(sigma[t]);
  return rank;
}

Solution solve_for_sequence(const ProblemInstance& inst,
                            const SwitchSequence& sigma, const RegionSet& rs,
                            const Tolerances& tol) {
  Solution sol;
  sol.sigma = sigma;
  sol.events = event_set(sigma);
  sol.stats.qp_count = 1;

  SequenceQp sq = build_sequence_qp(inst, sigma, rs, tol);
  QpResult qr = solve_qp(sq.qp, std::nullopt, tol);
  sol.stats.iterations = static_cast<std::uint64_t>(qr.pivots);
  sol.max_violation = qr.max_violation;

  if (qr.status == QpStatus::Infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  if (qr.status != QpStatus::Optimal) {
    sol.status = SolveStatus::NoConvergence;
    return sol;
  }

  Trajectory traj;
  traj.states.reserve(inst.N + 1);
  traj.inputs.reserve(inst.N);
  traj.states.push_back(inst.x0);
  for (int t = 1; t <= inst.N; ++t)
    traj.states.push_back(qr.z.segment(sq.state_offset(t), sq.n));
  {
    int free_idx = 0;
    for (int t = 0; t < inst.N; ++t) {
      if (free_idx < static_cast<int>(sq.free_inputs.size()) &&
          sq.free_inputs[free_idx] == t) {
        traj.inputs.push_back(qr.z.segment(sq.input_offset(free_idx), sq.m));
        ++free_idx;
      } else {
        traj.inputs.push_back(Eigen::VectorXd::Zero(sq.m));
      }
    }
  }

  sol.qp_feasible = true;
  if (!validate_schedule(inst, traj, sigma, rs, tol)) {
    // The relaxed (closed-box) QP found a point the strict trigger rule
    // rejects; the sequence contributes no admissible solution, though it
    // still counts as a feasible subproblem. Its QP value is kept for
    // reporting.
    sol.status = SolveStatus::Infeasible;
    sol.cost = qr.objective + sq.cost_constant;
    return sol;
  }

  sol.trajectory = std::move(traj);
  sol.cost = evaluate_cost(inst, sol.trajectory);
  sol.status = SolveStatus::Feasible;
  return sol;
}

namespace {

/// Evaluate ranks [begin, end) into an accumulator (and per-sequence table
/// slots when requested). Shared by the serial reference and the parallel
/// kernel so both run the exact same per-sequence code.
void enumerate_range(const ProblemInstance& inst, const RegionSet& rs,
                     int sigma0, std::uint64_t begin, std::uint64_t end,
                     const Tolerances& tol, Accumulator& acc,
                     std::vector<SequenceRecord>* table) {
  const int base = 2 * inst.n() + 1;
  for (std::uint64_t rank = begin; rank < end; ++rank) {
    SwitchSequence sigma = sigma_from_rank(rank, base, inst.N, sigma0);
    Solution sol = solve_for_sequence(inst, sigma, rs, tol);
    acc.qp_count += sol.stats.qp_count;
    acc.pivots += sol.stats.iterations;
    if (table)
      (*table)[rank] = SequenceRecord{rank, sol.status, sol.qp_feasible,
                                      sol.cost, sol.max_violation};
    if (sol.status == SolveStatus::NoConvergence) ++acc.nonconverged;
    if (sol.qp_feasible) {
      ++acc.feasible;
      if (sol.status == SolveStatus::Feasible)
        acc.note_candidate(sol.cost, rank, std::move(sol), tol);
      else
        ++acc.schedule_rejected;
    } else {
      ++acc.infeasible;
    }
  }
}

EnumerationReport finalize(const ProblemInstance& inst, const RegionSet& rs,
                           int sigma0, Accumulator&& acc, std::uint64_t total,
                           const Tolerances& tol,
                           std::vector<SequenceRecord>&& table,
                           std::chrono::steady_clock::time_point t0) {
  EnumerationReport rep;
  rep.total_sequences = total;
  rep.feasible_count = acc.feasible;
  rep.infeasible_count = acc.infeasible;
  rep.schedule_rejected_count = acc.schedule_rejected;
  rep.nonconverged_count = acc.nonconverged;
  rep.table = std::move(table);

  if (!acc.has_best) {
    rep.best.status = SolveStatus::Infeasible;
    rep.best.stats.qp_count = acc.qp_count;
    rep.best.stats.iterations = acc.pivots;
    rep.best.stats.wall_time = seconds_since(t0);
    return rep;
  }

  // Resolve cost ties within the tolerance window to the lexicographically
  // smallest sequence.
  std::uint64_t win_rank = acc.best_rank;
  const double window = tol.cost_window(acc.best_cost);
  for (const auto& [cost, rank] : acc.near_ties)
    if (cost <= acc.best_cost + window && rank < win_rank) win_rank = rank;

  if (win_rank == acc.best_rank) {
    rep.best = std::move(acc.best_solution);
  } else {
    const int base = 2 * inst.n() + 1;
    rep.best = solve_for_sequence(
        inst, sigma_from_rank(win_rank, base, inst.N, sigma0), rs, tol);
    ++acc.qp_count;
  }
  rep.best.status = SolveStatus::Optimal;
  rep.best.stats.qp_count = acc.qp_count;
  rep.best.stats.iterations = acc.pivots;
  rep.best.stats.wall_time = seconds_since(t0);
  return rep;
}

EnumerationReport solve_exact_pruned(const ProblemInstance& inst,
                                     const RegionSet& rs, int sigma0,
                                     const ExactOptions& opts,
                                     const Tolerances& tol,
                                     std::chrono::steady_clock::time_point t0);

}  // namespace

EnumerationReport solve_exact(const ProblemInstance& inst,
                              const ExactOptions& opts, const Tolerances& tol) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_instance(inst, tol);
  const RegionSet rs = build_regions(inst.n(), inst.eps);
  const int sigma0 = classify(inst.x0, rs, tol);
  const std::uint64_t total = sequence_count(inst.n(), inst.N);

  if (opts.prune) {
    if (opts.keep_table)
      throw std::invalid_argument(
          "solve_exact: per-sequence table requires pruning off");
    return solve_exact_pruned(inst, rs, sigma0, opts, tol, t0);
  }

  std::vector<SequenceRecord> table;
  if (opts.keep_table) {
    if (total > 100'000'000)
      throw std::invalid_argument("solve_exact: table too large to retain");
    table.resize(total);
  }

  const int workers = resolve_workers(opts.workers);
  std::vector<Accumulator> chunk_acc(
      static_cast<std::size_t>(std::min<std::uint64_t>(workers, total)) + 1);
  parallel_chunks(total, workers, [&](int chunk, std::uint64_t b, std::uint64_t e) {
    enumerate_range(inst, rs, sigma0, b, e, tol, chunk_acc[chunk],
                    opts.keep_table ? &table : nullptr);
  });

  Accumulator acc;
  for (auto& ca : chunk_acc) acc.merge(std::move(ca), tol);
  return finalize(inst, rs, sigma0, std::move(acc), total, tol,
                  std::move(table), t0);
}

EnumerationReport solve_exact_reference(const ProblemInstance& inst,
                                        bool keep_table, const Tolerances& tol) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_instance(inst, tol);
  const RegionSet rs = build_regions(inst.n(), inst.eps);
  const int sigma0 = classify(inst.x0, rs, tol);
  const std::uint64_t total = sequence_count(inst.n(), inst.N);

  std::vector<SequenceRecord> table;
  if (keep_table) table.resize(total);

  Accumulator acc;
  enumerate_range(inst, rs, sigma0, 0, total, tol, acc,
                  keep_table ? &table : nullptr);
  return finalize(inst, rs, sigma0, std::move(acc), total, tol,
                  std::move(table), t0);
}

namespace {

EnumerationReport solve_exact_pruned(const ProblemInstance& inst,
                                     const RegionSet& rs, int sigma0,
                                     const ExactOptions& opts,
                                     const Tolerances& tol,
                                     std::chrono::steady_clock::time_point t0) {
  const int base = 2 * inst.n() + 1;
  const int N = inst.N;
  const std::uint64_t total = sequence_count(inst.n(), inst.N);
  const int workers = resolve_workers(opts.workers);

  // base^(N-1-t) completions hang off a depth-t prefix.
  std::vector<std::uint64_t> completions(N);
  completions[N - 1] = 1;
  for (int t = N - 2; t >= 0; --t) completions[t] = completions[t + 1] * base;

  Accumulator acc;
  std::vector<std::uint64_t> survivors{0};
  for (int depth = 1; depth < N - 1 && !survivors.empty(); ++depth) {
    const std::uint64_t cand_total =
        survivors.size() * static_cast<std::uint64_t>(base);
    std::vector<std::uint8_t> alive(cand_total, 0);
    std::vector<std::uint64_t> chunk_qps(workers + 1, 0);
    const ProblemInstance trunc = inst.truncated(depth + 1);
    parallel_chunks(cand_total, workers,
                    [&](int chunk, std::uint64_t b, std::uint64_t e) {
      for (std::uint64_t idx = b; idx < e; ++idx) {
        const std::uint64_t prefix_rank =
            survivors[idx / base] * base + idx % base;
        SwitchSequence sigma =
            sigma_from_rank(prefix_rank, base, depth + 1, sigma0);
        SequenceQp sq = build_sequence_qp(trunc, sigma, rs, tol);
        QpResult qr = solve_qp(sq.qp, std::nullopt, tol);
        ++chunk_qps[chunk];
        // Prune only on a certified empty constraint set; anything
        // uncertain survives to the full solve.
        alive[idx] = qr.status != QpStatus::Infeasible ? 1 : 0;
      }
    });
    std::vector<std::uint64_t> next;
    next.reserve(cand_total);
    for (std::uint64_t idx = 0; idx < cand_total; ++idx) {
      if (alive[idx])
        next.push_back(survivors[idx / base] * base + idx % base);
      else
        acc.infeasible += completions[depth];
    }
    for (auto q : chunk_qps) acc.qp_count += q;
    survivors = std::move(next);
  }

  // Full-length solves for surviving prefixes (depth N-1 ranks are complete
  // sequence ranks once extended by the last digit).
  std::vector<std::uint64_t> full_ranks;
  if (N == 1) {
    full_ranks.push_back(0);
  } else {
    full_ranks.reserve(survivors.size() * base);
    for (std::uint64_t s : survivors)
      for (int digit = 0; digit < base; ++digit)
        full_ranks.push_back(s * base + digit);
  }

  std::vector<Accumulator> chunk_acc(workers + 1);
  parallel_chunks(full_ranks.size(), workers,
                  [&](int chunk, std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) {
      const std::uint64_t rank = full_ranks[i];
      SwitchSequence sigma = sigma_from_rank(rank, base, N, sigma0);
      Solution sol = solve_for_sequence(inst, sigma, rs, tol);
      Accumulator& ca = chunk_acc[chunk];
      ca.qp_count += sol.stats.qp_count;
      ca.pivots += sol.stats.iterations;
      if (sol.status == SolveStatus::NoConvergence) ++ca.nonconverged;
      if (sol.qp_feasible) {
        ++ca.feasible;
        if (sol.status == SolveStatus::Feasible)
          ca.note_candidate(sol.cost, rank, std::move(sol), tol);
        else
          ++ca.schedule_rejected;
      } else {
        ++ca.infeasible;
      }
    }
  });
  for (auto& ca : chunk_acc) acc.merge(std::move(ca), tol);
  return finalize(inst, rs, sigma0, std::move(acc), total, tol, {}, t0);
}

}  // namespace

}  // namespace etlq
