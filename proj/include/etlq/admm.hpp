#pragma once

#include <cstdint>
#include <vector>

#include "etlq/kkt.hpp"
#include "etlq/types.hpp"

namespace etlq {

struct AdmmConfig {
  double rho = 4.8;        ///< step-size (penalty) parameter, > 0
  int max_iter = 300;      ///< iteration budget per round
  double eps_tol = 1e-4;   ///< dynamics-residual tolerance for tracking bests
  bool adapt = true;       ///< double the budget when polishing fails
  std::uint64_t seed = 1;  ///< randomized start z0 ~ N(0, sigma0^2 I)
  double sigma0 = 1.0;
  bool keep_trace = false; ///< record (iter, residual, cost, best) rows
};

/// Step-size profiles used in the experiments; falls back to the
/// receding-horizon default 4.8 for other thresholds.
double default_rho_for_eps(double eps);

/// Splitting data: minimize 1/2 z'Fz subject to Gz = h plus the consensus
/// copy carrying the trigger constraint. z stacks x(0..N) then u(0..N-1);
/// G holds the N dynamics blocks in sequential form plus n rows pinning
/// x(0) = x0, so h = [0; x0].
struct AdmmData {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  int n = 0;
  int m = 0;
  int N = 0;
  double eps = 0.0;

  int dim() const { return n * (N + 1) + m * N; }
  int state_offset(int t) const { return t * n; }
  int input_offset(int t) const { return n * (N + 1) + t * m; }
};

AdmmData build_admm_data(const ProblemInstance& inst);

struct AdmmTraceRow {
  int iter = 0;
  double primal_residual = 0.0;
  double cost = 0.0;
  bool is_best = false;
};

struct AdmmState {
  Eigen::VectorXd z;       ///< consensus iterate
  Eigen::VectorXd u_dual;  ///< scaled duals, conformal to [G; I] rows
  Eigen::VectorXd z_best;
  double f_best = 0.0;     ///< 1/2 z'Fz of the best near-feasible iterate
  bool has_best = false;
  int iter = 0;
  std::vector<double> primal_residuals;
  std::vector<AdmmTraceRow> trace;
};

/// Fresh state with z0 ~ N(0, sigma0^2 I) drawn from cfg.seed.
AdmmState admm_init(const AdmmData& data, const AdmmConfig& cfg);

/// One iteration: quadratic half-step through the cached factorization of
/// F + rho(G'G + I), trigger projection (inputs zeroed wherever the matching
/// state block of the argument is strictly inside the box), dual ascent.
void admm_iterate(AdmmState& state, const AdmmData& data, const KktCache& cache,
                  const AdmmConfig& cfg);

/// Full heuristic: run the iteration, keep the best iterate whose dynamics
/// residual clears eps_tol, then polish by solving the disjunctive QP under
/// the schedule read off that iterate. Adaptive mode doubles the iteration
/// budget (up to 4 times) while polishing keeps failing and the run still
/// improves. final_state, when given, receives the iteration state (and the
/// trace rows if cfg.keep_trace).
Solution solve_admm(const ProblemInstance& inst, const AdmmConfig& cfg = {},
                    const Tolerances& tol = {},
                    AdmmState* final_state = nullptr);

}  // namespace etlq
