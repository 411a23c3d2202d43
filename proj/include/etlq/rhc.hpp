#pragma once

#include <cstdint>
#include <vector>

#include "etlq/admm.hpp"
#include "etlq/greedy.hpp"
#include "etlq/types.hpp"

namespace etlq {

enum class InnerSolver { Exact, Greedy, Admm };

const char* to_string(InnerSolver s);

struct RhcConfig {
  InnerSolver inner = InnerSolver::Exact;
  int sim_len = 500;
  Eigen::MatrixXd noise_cov;  ///< n x n PSD; empty or zero = noiseless
  Eigen::MatrixXd B_w;        ///< n x n injection; empty = identity
  std::uint64_t seed = 0;
  int workers = 0;            ///< threads for the exact inner solver
  AdmmConfig admm;            ///< settings for the Admm inner solver
  GreedyOptions greedy;       ///< settings for the Greedy inner solver
};

struct RhcStepStat {
  bool transmitted = false;
  SolveStatus status = SolveStatus::Optimal;
  std::uint64_t qp_count = 0;
  std::uint64_t iterations = 0;
};

struct RhcRun {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<char> transmissions;  ///< delta(t) = 1{||x(t)||_inf >= eps}
  std::vector<RhcStepStat> step_stats;
  double J_sum = 0.0;  ///< accumulated stage cost over the run
  double J_inf = 0.0;  ///< J_sum / steps
  double pi_inf = 0.0; ///< transmission rate
  int transmission_count = 0;
  bool failed = false; ///< an inner solve failed; run truncated there
  int failed_at = -1;
};

/// Closed-loop receding-horizon simulation: at each step, zero input without
/// solving when the state is strictly inside the trigger box, otherwise solve
/// the N-horizon problem from the current state and apply its first input.
RhcRun run_rhc(const ProblemInstance& inst, const RhcConfig& cfg,
               const Tolerances& tol = {});

struct StabilityConstants {
  Eigen::MatrixXd K_gain;  ///< stabilizing feedback u = Kx (infinite-horizon LQR)
  double a2 = 0.0;         ///< lambda_min(Q)
  double a3 = 0.0;         ///< max over schedules of lambda_max(S)
  double gamma = 0.0;      ///< 1 - a2/a3
  double eta = 0.0;        ///< lambda_max(A'PA + Q) * n * eps^2
  double kappa = 0.0;      ///< identified with a3
  double mu = 0.0;         ///< ultimate-bound radius sqrt(kappa * eta) / a2
  std::vector<Eigen::MatrixXd> S_table;  ///< schedule bitmask -> S matrix

  double mu_for(double user_kappa) const;
};

/// Schedule matrices over all of {0,1}^N (bit i of the index = delta(i)),
/// their worst-case top eigenvalue, and the ultimate-bound radius. The
/// terminal term of each S uses Q; set terminal_weight_p to experiment with
/// P instead. Throws when Q is singular or N > 20.
StabilityConstants compute_stability_constants(const ProblemInstance& inst,
                                               bool terminal_weight_p = false,
                                               const Tolerances& tol = {});

struct TradeoffRow {
  double eps = 0.0;
  double mean_J_inf = 0.0;
  double mean_pi_inf = 0.0;
  int runs_ok = 0;
  int runs_failed = 0;
};

struct TradeoffConfig {
  RhcConfig rhc;              ///< template; its seed is the master seed
  Eigen::MatrixXd x0_cov;     ///< covariance of the random initial state
  int workers = 0;            ///< parallelism across Monte Carlo runs
};

/// For each threshold, mc_runs independent closed-loop simulations with
/// x0 ~ N(0, x0_cov) and process noise from the run's own substream; rows
/// report means over successful runs. Bit-reproducible from (seed, config)
/// for any worker count.
std::vector<TradeoffRow> tradeoff_sweep(const ProblemInstance& inst,
                                        const std::vector<double>& eps_list,
                                        int mc_runs, const TradeoffConfig& cfg,
                                        const Tolerances& tol = {});

struct LyapunovSample {
  Eigen::VectorXd x;
  double value = 0.0;       ///< V(x)
  double value_next = 0.0;  ///< V(x+)
  double margin = 0.0;      ///< slack in the decrease inequality, >= 0 is a pass
  bool ok = false;
  bool evaluable = false;
};

struct LyapunovReport {
  int checked = 0;
  int violations = 0;
  int unevaluable = 0;
  double min_margin = 0.0;
  double mean_margin = 0.0;
  std::vector<LyapunovSample> samples;
};

/// Sample states uniformly from [-box_radius, box_radius]^n, compute the
/// optimal value there and after one closed-loop step (exact inner solver),
/// and check V(x+) - V(x) <= -lambda_min(Q) ||x||^2 + eta. Violations are
/// findings, not errors.
LyapunovReport lyapunov_decrease_check(const ProblemInstance& inst,
                                       int num_samples, double box_radius,
                                       std::uint64_t seed, int workers = 0,
                                       const Tolerances& tol = {});

}  // namespace etlq
