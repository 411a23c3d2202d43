#include "etlq/admm.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "etlq/exact.hpp"
#include "etlq/model.hpp"
#include "etlq/rng.hpp"

namespace etlq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double default_rho_for_eps(double eps) {
  if (std::abs(eps - 0.2) < 1e-9) return 9.8;
  if (std::abs(eps - 0.4) < 1e-9) return 5.8;
  if (std::abs(eps - 0.6) < 1e-9) return 6.9;
  return 4.8;
}

AdmmData build_admm_data(const ProblemInstance& inst) {
  AdmmData data;
  data.n = inst.n();
  data.m = inst.m();
  data.N = inst.N;
  data.eps = inst.eps;
  const int n = data.n, m = data.m, N = data.N;
  const int dim = data.dim();

  data.F = Eigen::MatrixXd::Zero(dim, dim);
  for (int t = 0; t < N; ++t)
    data.F.block(data.state_offset(t), data.state_offset(t), n, n) = inst.Q;
  data.F.block(data.state_offset(N), data.state_offset(N), n, n) = inst.P;
  for (int t = 0; t < N; ++t)
    data.F.block(data.input_offset(t), data.input_offset(t), m, m) = inst.R;

  // N dynamics block-rows, then n rows pinning x(0).
  data.G = Eigen::MatrixXd::Zero(n * N + n, dim);
  data.h = Eigen::VectorXd::Zero(n * N + n);
  for (int t = 0; t < N; ++t) {
    data.G.block(t * n, data.state_offset(t), n, n) = inst.A;
    data.G.block(t * n, data.state_offset(t + 1), n, n) =
        -Eigen::MatrixXd::Identity(n, n);
    data.G.block(t * n, data.input_offset(t), n, m) = inst.B;
  }
  data.G.block(N * n, data.state_offset(0), n, n) =
      Eigen::MatrixXd::Identity(n, n);
  data.h.segment(N * n, n) = inst.x0;
  return data;
}

namespace {

/// Trigger projection: pass states through, zero u(t) whenever the x(t)
/// block of the argument lies strictly inside the box.
Eigen::VectorXd project_trigger(const AdmmData& data, Eigen::VectorXd arg) {
  for (int t = 0; t < data.N; ++t) {
    if (arg.segment(data.state_offset(t), data.n).lpNorm<Eigen::Infinity>() <
        data.eps)
      arg.segment(data.input_offset(t), data.m).setZero();
  }
  return arg;
}

}  // namespace

AdmmState admm_init(const AdmmData& data, const AdmmConfig& cfg) {
  AdmmState st;
  Rng rng = Rng::stream(cfg.seed, 0);
  st.z = cfg.sigma0 * rng.gaussian_vector(data.dim());
  st.u_dual = Eigen::VectorXd::Zero(data.G.rows() + data.dim());
  st.f_best = kInf;
  return st;
}

void admm_iterate(AdmmState& state, const AdmmData& data, const KktCache& cache,
                  const AdmmConfig& cfg) {
  const int grows = static_cast<int>(data.G.rows());
  const int dim = data.dim();
  auto u_g = state.u_dual.head(grows);
  auto u_i = state.u_dual.tail(dim);

  Eigen::VectorXd rhs =
      cfg.rho * (data.G.transpose() * (data.h - u_g) + (state.z - u_i));
  Eigen::VectorXd half = cache.solve(rhs);
  Eigen::VectorXd znew = project_trigger(data, half + u_i);

  u_g += data.G * half - data.h;
  u_i += half - znew;

  const double res = (data.G * znew - data.h).norm();
  const double cost = 0.5 * znew.dot(data.F * znew);
  bool is_best = false;
  if (res <= cfg.eps_tol && cost < state.f_best) {
    state.f_best = cost;
    state.z_best = znew;
    state.has_best = true;
    is_best = true;
  }
  state.z = std::move(znew);
  state.primal_residuals.push_back(res);
  ++state.iter;
  if (cfg.keep_trace)
    state.trace.push_back(AdmmTraceRow{state.iter, res, cost, is_best});
}

Solution solve_admm(const ProblemInstance& inst, const AdmmConfig& cfg,
                    const Tolerances& tol, AdmmState* final_state) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_instance(inst, tol);
  if (!(cfg.rho > 0.0) || !(cfg.eps_tol > 0.0) || cfg.max_iter < 1)
    throw std::invalid_argument("solve_admm: invalid configuration");

  const RegionSet rs = build_regions(inst.n(), inst.eps);
  const AdmmData data = build_admm_data(inst);
  const KktCache cache = kkt_factorize(
      data.F + cfg.rho * (data.G.transpose() * data.G +
                          Eigen::MatrixXd::Identity(data.dim(), data.dim())));

  AdmmState state = admm_init(data, cfg);

  Solution sol;
  sol.status = SolveStatus::NoConvergence;

  auto finish = [&](Solution&& s) {
    s.stats.iterations = static_cast<std::uint64_t>(state.iter);
    s.stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (final_state) *final_state = std::move(state);
    return std::move(s);
  };

  double prev_f_best = kInf;
  double prev_min_res = kInf;
  std::uint64_t polish_count = 0;
  int budget = cfg.max_iter;
  const int max_rounds = cfg.adapt ? 5 : 1;  // base run + up to 4 doublings

  for (int round = 0; round < max_rounds; ++round) {
    while (state.iter < budget) {
      admm_iterate(state, data, cache, cfg);
      const auto& hist = state.primal_residuals;
      const std::size_t k = hist.size();
      if (!std::isfinite(hist.back()) ||
          (k > 50 && hist[k - 1] > cfg.eps_tol &&
           hist[k - 1] > 1e3 * hist[k - 51])) {
        sol.sigma.clear();
        sol.status = SolveStatus::NoConvergence;
        sol.stats.qp_count = polish_count;
        return finish(std::move(sol));
      }
    }

    if (state.has_best) {
      // Read the schedule off the best iterate. x~(0) tracks x0 to within
      // eps_tol, but the label at t = 0 must be the instance's own.
      SwitchSequence sigma(inst.N);
      sigma[0] = classify(inst.x0, rs, tol);
      for (int t = 1; t < inst.N; ++t)
        sigma[t] = classify(state.z_best.segment(data.state_offset(t), data.n),
                            rs, tol);
      Solution polished = solve_for_sequence(inst, sigma, rs, tol);
      ++polish_count;
      if (polished.status == SolveStatus::Feasible) {
        polished.stats.qp_count = polish_count;
        return finish(std::move(polished));
      }
    }

    if (round + 1 >= max_rounds) break;
    const double min_res =
        state.primal_residuals.empty()
            ? kInf
            : *std::min_element(state.primal_residuals.begin(),
                                state.primal_residuals.end());
    const bool improved = state.f_best < prev_f_best * (1.0 - 1e-12) ||
                          min_res < prev_min_res * (1.0 - 1e-12);
    if (round > 0 && !improved) break;
    prev_f_best = state.f_best;
    prev_min_res = min_res;
    budget *= 2;
  }

  sol.status = SolveStatus::NoConvergence;
  sol.stats.qp_count = polish_count;
  return finish(std::move(sol));
}

}  // namespace etlq
