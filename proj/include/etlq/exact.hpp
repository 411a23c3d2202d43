#pragma once

#include <cstdint>
#include <vector>

#include "etlq/qp.hpp"
#include "etlq/types.hpp"

namespace etlq {

struct ExactOptions {
  int workers = 0;          ///< 0 = all hardware threads
  bool keep_table = false;  ///< retain the per-sequence cost table
  bool prune = false;       ///< skip completions of infeasible prefixes
};

struct SequenceRecord {
  std::uint64_t rank = 0;  ///< lexicographic rank of sigma(1..N-1)
  SolveStatus status = SolveStatus::Infeasible;
  bool qp_feasible = false;
  double cost = 0.0;
  double max_violation = 0.0;
};

struct EnumerationReport {
  Solution best;
  std::uint64_t total_sequences = 0;
  /// Sequences whose QP had a solution. This is the published bookkeeping;
  /// a QP-feasible candidate can still be rejected by the strict trigger
  /// rule and excluded from the minimum (schedule_rejected_count of them).
  std::uint64_t feasible_count = 0;
  std::uint64_t infeasible_count = 0;
  std::uint64_t schedule_rejected_count = 0;
  std::uint64_t nonconverged_count = 0;
  std::vector<SequenceRecord> table;  ///< filled when keep_table
};

/// Number of switching sequences for the instance: (2n+1)^(N-1).
/// Throws std::overflow_error past 2^62.
std::uint64_t sequence_count(int n, int N);

/// Decode rank -> sigma. Ranks order sigma(1..N-1) lexicographically
/// (big-endian digits, base 2n+1); sigma(0) is fixed by x0.
SwitchSequence sigma_from_rank(std::uint64_t rank, int base, int N, int sigma0);
std::uint64_t rank_from_sigma(const SwitchSequence& sigma, int base);

/// Solve the convex subproblem for one switching sequence: build the QP,
/// solve it, reconstruct the trajectory (eliminated inputs restored as exact
/// zeros), validate the schedule and price it with evaluate_cost. Returns
/// Feasible, Infeasible (with the phase-1 certificate), or NoConvergence.
Solution solve_for_sequence(const ProblemInstance& inst,
                            const SwitchSequence& sigma, const RegionSet& rs,
                            const Tolerances& tol = {});

/// Global solve by enumerating all sequences and keeping the feasible
/// minimum. Cost ties within the tolerance window resolve to the
/// lexicographically smallest sequence, and results are bit-identical for
/// any worker count (associative, partition-independent reduction).
EnumerationReport solve_exact(const ProblemInstance& inst,
                              const ExactOptions& opts = {},
                              const Tolerances& tol = {});

/// Plain sequential enumeration, kept as the reference implementation the
/// parallel kernel is tested against (and benchmarked in tools/bench_enum).
EnumerationReport solve_exact_reference(const ProblemInstance& inst,
                                        bool keep_table = false,
                                        const Tolerances& tol = {});

}  // namespace etlq
