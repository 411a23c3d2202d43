#include "etlq/rhc.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "etlq/exact.hpp"
#include "etlq/lqr.hpp"
#include "etlq/model.hpp"
#include "etlq/parallel.hpp"
#include "etlq/rng.hpp"

namespace etlq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// One N-horizon solve from the current state with the configured solver.
Solution inner_solve(const ProblemInstance& at_state, const RhcConfig& cfg,
                     std::uint64_t step, const Tolerances& tol) {
  switch (cfg.inner) {
    case InnerSolver::Exact: {
      ExactOptions opts;
      opts.workers = cfg.workers;
      return solve_exact(at_state, opts, tol).best;
    }
    case InnerSolver::Greedy:
      return solve_greedy(at_state, cfg.greedy, tol);
    case InnerSolver::Admm: {
      AdmmConfig ac = cfg.admm;
      ac.seed = mix_seed(cfg.seed, 0x5Au * 1000003u + step);
      return solve_admm(at_state, ac, tol);
    }
  }
  throw std::logic_error("inner_solve: unknown solver");
}

}  // namespace

const char* to_string(InnerSolver s) {
  switch (s) {
    case InnerSolver::Exact: return "exact";
    case InnerSolver::Greedy: return "greedy";
    case InnerSolver::Admm: return "admm";
  }
  return "?";
}

RhcRun run_rhc(const ProblemInstance& inst, const RhcConfig& cfg,
               const Tolerances& tol) {
  validate_instance(inst, tol);
  if (cfg.sim_len < 1) throw std::invalid_argument("run_rhc: sim_len must be >= 1");
  const int n = inst.n();

  const bool noisy = cfg.noise_cov.size() > 0 &&
                     cfg.noise_cov.cwiseAbs().maxCoeff() > 0.0;
  Eigen::MatrixXd noise_sqrt;
  Eigen::MatrixXd bw = cfg.B_w.size() > 0
                           ? cfg.B_w
                           : Eigen::MatrixXd::Identity(n, n);
  if (noisy) {
    if (cfg.noise_cov.rows() != n || cfg.noise_cov.cols() != n)
      throw std::invalid_argument("run_rhc: noise covariance must be n x n");
    noise_sqrt = psd_sqrt(cfg.noise_cov);
  }
  Rng rng = Rng::stream(cfg.seed, 0x11);

  RhcRun run;
  run.states.reserve(cfg.sim_len + 1);
  run.states.push_back(inst.x0);

  Eigen::VectorXd x = inst.x0;
  for (int t = 0; t < cfg.sim_len; ++t) {
    RhcStepStat stat;
    stat.transmitted = x.lpNorm<Eigen::Infinity>() >= inst.eps;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(inst.m());
    if (stat.transmitted) {
      Solution sol = inner_solve(inst.from_state(x), cfg,
                                 static_cast<std::uint64_t>(t), tol);
      stat.status = sol.status;
      stat.qp_count = sol.stats.qp_count;
      stat.iterations = sol.stats.iterations;
      if (sol.status != SolveStatus::Optimal &&
          sol.status != SolveStatus::Feasible) {
        run.failed = true;
        run.failed_at = t;
        run.step_stats.push_back(stat);
        break;
      }
      u = sol.trajectory.inputs[0];
    }
    run.inputs.push_back(u);
    run.transmissions.push_back(stat.transmitted ? 1 : 0);
    run.step_stats.push_back(stat);
    run.J_sum += x.dot(inst.Q * x) + u.dot(inst.R * u);
    if (stat.transmitted) ++run.transmission_count;

    x = inst.A * x + inst.B * u;
    if (noisy) x += bw * (noise_sqrt * rng.gaussian_vector(n));
    run.states.push_back(x);
  }

  const int steps = static_cast<int>(run.inputs.size());
  run.J_inf = steps > 0 ? run.J_sum / steps : 0.0;
  run.pi_inf = steps > 0 ? static_cast<double>(run.transmission_count) / steps
                         : 0.0;
  return run;
}

double StabilityConstants::mu_for(double user_kappa) const {
  return std::sqrt(user_kappa * eta) / a2;
}

StabilityConstants compute_stability_constants(const ProblemInstance& inst,
                                               bool terminal_weight_p,
                                               const Tolerances& tol) {
  validate_instance(inst, tol);
  const int n = inst.n();
  const int N = inst.N;
  if (N > 20)
    throw std::invalid_argument(
        "compute_stability_constants: schedule enumeration needs N <= 20");

  StabilityConstants sc;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esq(inst.Q,
                                                       Eigen::EigenvaluesOnly);
    sc.a2 = esq.eigenvalues().minCoeff();
  }
  if (sc.a2 <= 1e-12)
    throw std::invalid_argument(
        "compute_stability_constants: Q is singular (a2 = 0)");

  sc.K_gain = dare_gain(inst.A, inst.B, inst.Q, inst.R);
  const Eigen::MatrixXd a_closed = inst.A + inst.B * sc.K_gain;
  const Eigen::MatrixXd q_closed =
      inst.Q + sc.K_gain.transpose() * inst.R * sc.K_gain;
  const Eigen::MatrixXd q_term = terminal_weight_p ? inst.P : inst.Q;

  const std::uint32_t schedules = 1u << N;
  sc.S_table.resize(schedules);
  sc.a3 = 0.0;
  for (std::uint32_t mask = 0; mask < schedules; ++mask) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < N; ++i) {
      const bool transmit = (mask >> i) & 1u;
      const Eigen::MatrixXd& qd = transmit ? q_closed : inst.Q;
      S += phi.transpose() * qd * phi;
      phi = (transmit ? a_closed : inst.A) * phi;
    }
    S += phi.transpose() * q_term * phi;
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    sc.a3 = std::max(sc.a3, es.eigenvalues().maxCoeff());
    sc.S_table[mask] = std::move(S);
  }

  sc.gamma = 1.0 - sc.a2 / sc.a3;
  Eigen::MatrixXd apa = inst.A.transpose() * inst.P * inst.A + inst.Q;
  apa = 0.5 * (apa + apa.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esa(apa, Eigen::EigenvaluesOnly);
  sc.eta = esa.eigenvalues().maxCoeff() * n * inst.eps * inst.eps;
  sc.kappa = sc.a3;
  sc.mu = sc.mu_for(sc.kappa);
  return sc;
}

std::vector<TradeoffRow> tradeoff_sweep(const ProblemInstance& inst,
                                        const std::vector<double>& eps_list,
                                        int mc_runs, const TradeoffConfig& cfg,
                                        const Tolerances& tol) {
  if (mc_runs < 1) throw std::invalid_argument("tradeoff_sweep: mc_runs >= 1");
  const int n = inst.n();
  Eigen::MatrixXd x0_sqrt = psd_sqrt(
      cfg.x0_cov.size() > 0 ? cfg.x0_cov : Eigen::MatrixXd::Identity(n, n));

  std::vector<TradeoffRow> rows;
  rows.reserve(eps_list.size());
  for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
    ProblemInstance pe = inst;
    pe.eps = eps_list[ei];

    struct RunOut {
      double J = 0.0, pi = 0.0;
      bool ok = false;
    };
    std::vector<RunOut> outs(mc_runs);
    parallel_chunks(mc_runs, cfg.workers,
                    [&](int, std::uint64_t b, std::uint64_t e) {
      for (std::uint64_t r = b; r < e; ++r) {
        const std::uint64_t run_seed =
            mix_seed(mix_seed(cfg.rhc.seed, 0xE5 + ei), r);
        Rng x0_rng = Rng::stream(run_seed, 0x0D);
        RhcConfig rc = cfg.rhc;
        rc.seed = run_seed;
        rc.workers = 1;  // parallelism lives at the run level here
        RhcRun run = run_rhc(pe.from_state(x0_sqrt * x0_rng.gaussian_vector(n)),
                             rc, tol);
        outs[r] = RunOut{run.J_inf, run.pi_inf, !run.failed};
      }
    });

    TradeoffRow row;
    row.eps = eps_list[ei];
    for (const RunOut& o : outs) {
      if (o.ok) {
        row.mean_J_inf += o.J;
        row.mean_pi_inf += o.pi;
        ++row.runs_ok;
      } else {
        ++row.runs_failed;
      }
    }
    if (row.runs_ok > 0) {
      row.mean_J_inf /= row.runs_ok;
      row.mean_pi_inf /= row.runs_ok;
    }
    rows.push_back(row);
  }
  return rows;
}

LyapunovReport lyapunov_decrease_check(const ProblemInstance& inst,
                                       int num_samples, double box_radius,
                                       std::uint64_t seed, int workers,
                                       const Tolerances& tol) {
  const StabilityConstants sc = compute_stability_constants(inst, false, tol);
  const int n = inst.n();

  // Draw all samples up front so the set does not depend on worker count.
  Rng rng = Rng::stream(seed, 0x17);
  std::vector<Eigen::VectorXd> xs(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = rng.uniform(-box_radius, box_radius);
    xs[i] = x;
  }

  LyapunovReport rep;
  rep.samples.resize(num_samples);
  ExactOptions opts;
  opts.workers = 1;
  parallel_chunks(num_samples, workers,
                  [&](int, std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) {
      LyapunovSample& s = rep.samples[i];
      s.x = xs[i];
      EnumerationReport r1 = solve_exact(inst.from_state(s.x), opts, tol);
      if (r1.best.status != SolveStatus::Optimal) continue;
      // First optimal input is identically zero inside the box, so this is
      // the closed loop's own step.
      Eigen::VectorXd xn = inst.A * s.x + inst.B * r1.best.trajectory.inputs[0];
      EnumerationReport r2 = solve_exact(inst.from_state(xn), opts, tol);
      if (r2.best.status != SolveStatus::Optimal) continue;
      s.evaluable = true;
      s.value = r1.best.cost;
      s.value_next = r2.best.cost;
      const double bound = -sc.a2 * s.x.squaredNorm() + sc.eta;
      s.margin = bound - (s.value_next - s.value);
      s.ok = s.margin >= -1e-6 * std::max(1.0, std::abs(s.value));
    }
  });

  double margin_sum = 0.0;
  rep.min_margin = kInf;
  for (const LyapunovSample& s : rep.samples) {
    if (!s.evaluable) {
      ++rep.unevaluable;
      continue;
    }
    ++rep.checked;
    if (!s.ok) ++rep.violations;
    rep.min_margin = std::min(rep.min_margin, s.margin);
    margin_sum += s.margin;
  }
  rep.mean_margin = rep.checked > 0 ? margin_sum / rep.checked : 0.0;
  if (rep.checked == 0) rep.min_margin = 0.0;
  return rep;
}

}  // namespace etlq
