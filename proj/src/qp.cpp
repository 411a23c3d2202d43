#include "etlq/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "etlq/model.hpp"

namespace etlq {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Outcome of the dual active-set loop in reduced coordinates.
struct GiOutcome {
  Eigen::VectorXd y;
  std::vector<int> active;
  std::vector<double> mult;
  int pivots = 0;
  bool optimal = false;
  bool infeasible_signal = false;  ///< constraint incompatible with actives
  bool hit_pivot_cap = false;
};

/// Dual active-set iteration for min 1/2 y'Hy + g'y s.t. M y <= c, with H PD
/// supplied as a solve operator. Starts at the unconstrained optimum (which
/// must be passed in as y0 = -Hinv g), keeps dual feasibility, and picks up
/// the most violated constraint each round (warm-hinted rows first, lowest
/// index on ties; Bland-style lowest-index drops).
template <class HinvOp>
GiOutcome gi_loop(const HinvOp& hinv, const Eigen::MatrixXd& M,
                  const Eigen::VectorXd& c, Eigen::VectorXd y0, int pivot_cap,
                  double feas_tol, const std::vector<int>& warm_hints) {
  const int rows = static_cast<int>(M.rows());

  GiOutcome out;
  out.y = std::move(y0);

  Eigen::MatrixXd hinv_nw(out.y.size(), 0);  // columns Hinv n_w for w active
  Eigen::MatrixXd nw_hinv_nw(0, 0);          // N_W Hinv N_W'
  std::size_t hint_pos = 0;

  auto violation = [&](int j) { return M.row(j).dot(out.y) - c[j]; };

  while (true) {
    // Select the next constraint to enforce.
    int p = -1;
    double worst = feas_tol;
    for (; hint_pos < warm_hints.size(); ++hint_pos) {
      if (violation(warm_hints[hint_pos]) > feas_tol) {
        p = warm_hints[hint_pos++];
        break;
      }
    }
    if (p < 0) {
      for (int j = 0; j < rows; ++j) {
        const double v = violation(j);
        if (v > worst) {
          worst = v;
          p = j;
        }
      }
    }
    if (p < 0) {
      out.optimal = true;
      return out;
    }

    double u_p = 0.0;  // multiplier of the incoming constraint
    while (true) {
      if (++out.pivots > pivot_cap) {
        out.hit_pivot_cap = true;
        return out;
      }
      const double viol_p = violation(p);
      if (viol_p <= feas_tol) break;  // became satisfied during drops

      const Eigen::VectorXd n_p = M.row(p).transpose();
      const Eigen::VectorXd hn = hinv(n_p);
      const int na = static_cast<int>(out.active.size());

      Eigen::VectorXd r(na), z_dir;
      if (na > 0) {
        Eigen::VectorXd nw_hn(na);
        for (int j = 0; j < na; ++j) nw_hn[j] = M.row(out.active[j]).dot(hn);
        r = nw_hinv_nw.ldlt().solve(nw_hn);
        z_dir = hn - hinv_nw * r;
      } else {
        z_dir = hn;
      }

      const bool dependent = z_dir.norm() <= 1e-10 * (hn.norm() + 1e-300);
      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < na; ++j) {
        if (r[j] > 1e-12) {
          const double ratio = out.mult[j] / r[j];
          if (ratio < t1 - 1e-15 ||
              (ratio < t1 + 1e-15 && (drop < 0 || out.active[j] < out.active[drop]))) {
            t1 = ratio;
            drop = j;
          }
        }
      }

      if (dependent) {
        if (drop < 0) {
          out.infeasible_signal = true;
          return out;
        }
        for (int j = 0; j < na; ++j) out.mult[j] -= t1 * r[j];
        u_p += t1;
      } else {
        const double ztn = n_p.dot(z_dir);
        const double t2 = viol_p / ztn;
        const double t = std::min(t1, t2);
        out.y -= t * z_dir;
        for (int j = 0; j < na; ++j) out.mult[j] -= t * r[j];
        u_p += t;
        if (t2 <= t1) {
          // Constraint p joins the active set.
          out.active.push_back(p);
          out.mult.push_back(u_p);
          hinv_nw.conservativeResize(Eigen::NoChange, na + 1);
          hinv_nw.col(na) = hn;
          Eigen::MatrixXd grown(na + 1, na + 1);
          grown.topLeftCorner(na, na) = nw_hinv_nw;
          for (int j = 0; j < na; ++j) {
            const double v = M.row(out.active[j]).dot(hn);
            grown(j, na) = v;
            grown(na, j) = v;
          }
          grown(na, na) = n_p.dot(hn);
          nw_hinv_nw = std::move(grown);
          break;
        }
      }

      // Drop the blocking constraint and keep working on p.
      if (drop >= 0) {
        const int last = na - 1;
        out.active.erase(out.active.begin() + drop);
        out.mult.erase(out.mult.begin() + drop);
        Eigen::MatrixXd shrunk_cols(hinv_nw.rows(), last);
        Eigen::MatrixXd shrunk(last, last);
        int cj = 0;
        for (int j = 0; j < na; ++j) {
          if (j == drop) continue;
          shrunk_cols.col(cj) = hinv_nw.col(j);
          int ci = 0;
          for (int i = 0; i < na; ++i) {
            if (i == drop) continue;
            shrunk(ci, cj) = nw_hinv_nw(i, j);
            ++ci;
          }
          ++cj;
        }
        hinv_nw = std::move(shrunk_cols);
        nw_hinv_nw = std::move(shrunk);
      }
    }
  }
}

/// Null-space data for the equality block.
struct EqReduction {
  Eigen::VectorXd z_part;  ///< min-norm solution of A_eq z = b_eq
  Eigen::MatrixXd Z;       ///< orthonormal null basis, d x f
  double residual = 0.0;   ///< ||A_eq z_part - b_eq||_inf
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_et;  ///< QR of A_eq'
  bool has_qr = false;
};

EqReduction reduce_equalities(const QpProblem& p) {
  const int d = p.dim();
  const int e = p.eq_count();
  EqReduction red;
  if (e == 0) {
    red.z_part = Eigen::VectorXd::Zero(d);
    red.Z = Eigen::MatrixXd::Identity(d, d);
    return red;
  }
  red.qr_et.compute(p.A_eq.transpose());
  red.has_qr = true;
  const int rank = static_cast<int>(red.qr_et.rank());
  Eigen::MatrixXd Qfull = red.qr_et.householderQ();
  red.Z = Qfull.rightCols(d - rank);
  // Min-norm particular solution through the same decomposition:
  // A_eq' P = Q R  =>  A_eq = P R' Q', solve R(0:r,0:r)' w = (P' b)(0:r).
  Eigen::VectorXd pb = red.qr_et.colsPermutation().transpose() * p.b_eq;
  Eigen::MatrixXd Rtop = red.qr_et.matrixR()
                             .topLeftCorner(rank, rank)
                             .template triangularView<Eigen::Upper>();
  Eigen::VectorXd w =
      Rtop.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank));
  red.z_part = Qfull.leftCols(rank) * w;
  red.residual = (p.A_eq * red.z_part - p.b_eq).lpNorm<Eigen::Infinity>();
  return red;
}

struct Phase1Out {
  double s_star = 0.0;
  bool converged = false;
  int pivots = 0;
};

/// Minimize the maximum constraint violation over the equality manifold,
/// stated in reduced coordinates: min s s.t. M y - 1 s <= c. Solved by
/// proximal-point iteration (finitely convergent on piecewise-linear
/// objectives); every inner problem is a perfectly conditioned QP with unit
/// Hessian, so the certificate does not inherit the problem's scaling.
Phase1Out phase1_max_violation(const Eigen::MatrixXd& M, const Eigen::VectorXd& c,
                               const Tolerances& tol, int pivot_cap) {
  const int f = static_cast<int>(M.cols());
  const int rows = static_cast<int>(M.rows());
  Eigen::MatrixXd Mphi(rows, f + 1);
  Mphi.leftCols(f) = M;
  Mphi.rightCols(1).setConstant(-1.0);

  auto identity_solve = [](const Eigen::VectorXd& v) { return v; };

  Phase1Out out;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(f + 1);
  center[f] = rows > 0 ? (-c).maxCoeff() : 0.0;  // feasible start
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd g = -center;
    g[f] += 1.0;
    Eigen::VectorXd y0 = -g;
    GiOutcome gi = gi_loop(identity_solve, Mphi, c, std::move(y0), pivot_cap,
                           tol.feas * 1e-3, {});
    out.pivots += gi.pivots;
    if (!gi.optimal) {
      out.s_star = center[f];
      return out;  // should not happen; report the last feasible value
    }
    const double moved = (gi.y - center).lpNorm<Eigen::Infinity>();
    center = gi.y;
    if (center[f] < -10.0 * tol.feas) break;  // clearly feasible, done
    if (moved <= 1e-12 * (1.0 + std::abs(center[f]))) {
      out.converged = true;
      break;
    }
  }
  out.s_star = center[f];
  return out;
}

double kkt_residual(const QpProblem& p, const QpResult& res) {
  double r = 0.0;
  Eigen::VectorXd stat = p.H * res.z + p.g;
  if (p.eq_count() > 0) stat += p.A_eq.transpose() * res.mult_eq;
  if (p.in_count() > 0) stat += p.A_in.transpose() * res.mult_in;
  r = stat.lpNorm<Eigen::Infinity>();
  if (p.eq_count() > 0)
    r = std::max(r, (p.A_eq * res.z - p.b_eq).lpNorm<Eigen::Infinity>());
  if (p.in_count() > 0) {
    Eigen::VectorXd slack = p.A_in * res.z - p.b_in;
    r = std::max(r, std::max(0.0, slack.maxCoeff()) - std::max(0.0, res.max_violation));
    r = std::max(r, slack.cwiseProduct(res.mult_in).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace

QpResult solve_qp(const QpProblem& p,
                  const std::optional<Eigen::VectorXd>& warm_start,
                  const Tolerances& tol) {
  const int d = p.dim();
  const int e = p.eq_count();
  const int ni = p.in_count();
  if (p.H.cols() != d || p.g.size() != d)
    throw std::invalid_argument("solve_qp: H/g dimension mismatch");
  if ((e > 0 && p.A_eq.cols() != d) || p.b_eq.size() != e)
    throw std::invalid_argument("solve_qp: equality block dimension mismatch");
  if ((ni > 0 && p.A_in.cols() != d) || p.b_in.size() != ni)
    throw std::invalid_argument("solve_qp: inequality block dimension mismatch");

  const int pivot_cap = 50 * (d + ni);
  QpResult res;
  res.mult_eq = Eigen::VectorXd::Zero(e);
  res.mult_in = Eigen::VectorXd::Zero(ni);

  EqReduction red = reduce_equalities(p);
  if (red.residual > tol.feas * (1.0 + p.b_eq.lpNorm<Eigen::Infinity>())) {
    res.status = QpStatus::Infeasible;
    res.max_violation = red.residual;
    res.z = red.z_part;
    return res;
  }

  const int f = static_cast<int>(red.Z.cols());
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  if (ni > 0) {
    M = p.A_in * red.Z;
    c = p.b_in - p.A_in * red.z_part;
  } else {
    M = Eigen::MatrixXd(0, f);
    c = Eigen::VectorXd(0);
  }

  auto finish = [&](const Eigen::VectorXd& y, const std::vector<int>& active,
                    const std::vector<double>& mult) {
    res.z = red.z_part + red.Z * y;
    for (std::size_t j = 0; j < active.size(); ++j) res.mult_in[active[j]] = mult[j];
    res.active_set = active;
    std::sort(res.active_set.begin(), res.active_set.end());
    if (e > 0) {
      Eigen::VectorXd rhs = -(p.H * res.z + p.g);
      if (ni > 0) rhs -= p.A_in.transpose() * res.mult_in;
      res.mult_eq = red.qr_et.solve(rhs);
    }
    res.objective = 0.5 * res.z.dot(p.H * res.z) + p.g.dot(res.z);
    res.kkt_residual = kkt_residual(p, res);
  };

  // Fully determined by the equalities: nothing to optimize.
  if (f == 0) {
    const double maxviol =
        ni > 0 ? (p.A_in * red.z_part - p.b_in).maxCoeff() : 0.0;
    res.max_violation = std::max(0.0, maxviol);
    if (maxviol <= tol.feas) {
      finish(Eigen::VectorXd(0), {}, {});
      res.status = QpStatus::Optimal;
    } else {
      res.z = red.z_part;
      res.status = QpStatus::Infeasible;
    }
    return res;
  }

  Eigen::MatrixXd h_r = red.Z.transpose() * p.H * red.Z;
  Eigen::VectorXd g_r = red.Z.transpose() * (p.H * red.z_part + p.g);
  Eigen::LLT<Eigen::MatrixXd> llt(h_r);
  if (llt.info() != Eigen::Success) {
    res.status = QpStatus::Unbounded;  // H not PD on the equality null space
    res.z = red.z_part;
    return res;
  }
  auto hinv = [&llt](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return llt.solve(v);
  };

  std::vector<int> hints;
  if (warm_start && warm_start->size() == d && ni > 0) {
    Eigen::VectorXd yw = red.Z.transpose() * (*warm_start - red.z_part);
    Eigen::VectorXd slack = M * yw - c;
    for (int j = 0; j < ni; ++j)
      if (std::abs(slack[j]) <= 1e-6 * (1.0 + std::abs(c[j]))) hints.push_back(j);
  }

  GiOutcome gi = gi_loop(hinv, M, c, hinv(-g_r), pivot_cap, tol.feas, hints);
  res.pivots = gi.pivots;
  if (gi.optimal) {
    finish(gi.y, gi.active, gi.mult);
    res.status = QpStatus::Optimal;
    return res;
  }
  if (gi.hit_pivot_cap) {
    finish(gi.y, gi.active, gi.mult);
    res.status = QpStatus::MaxIter;
    return res;
  }

  // The active-set loop certified incompatibility; get the max-violation
  // certificate and decide.
  Phase1Out ph = phase1_max_violation(M, c, tol, pivot_cap);
  res.phase1_used = true;
  res.pivots += ph.pivots;
  res.max_violation = ph.s_star;
  if (ph.s_star > tol.feas) {
    res.status = QpStatus::Infeasible;
    res.z = red.z_part;
    return res;
  }

  // Marginally feasible: relax by the certificate and re-run.
  Eigen::VectorXd c_relaxed =
      c.array() + (std::max(ph.s_star, 0.0) + 0.1 * tol.feas);
  GiOutcome gi2 = gi_loop(hinv, M, c_relaxed, hinv(-g_r), pivot_cap, tol.feas, hints);
  res.pivots += gi2.pivots;
  if (gi2.optimal) {
    finish(gi2.y, gi2.active, gi2.mult);
    res.status = QpStatus::Optimal;
    return res;
  }
  res.status = gi2.hit_pivot_cap ? QpStatus::MaxIter : QpStatus::Infeasible;
  res.z = red.z_part;
  return res;
}

SequenceQp build_sequence_qp(const ProblemInstance& inst,
                             const SwitchSequence& sigma, const RegionSet& rs,
                             const Tolerances& tol) {
  const int n = inst.n();
  const int m = inst.m();
  const int N = inst.N;
  const int k = static_cast<int>(sigma.size());
  if (k < 1 || k > N)
    throw std::invalid_argument("build_sequence_qp: sigma length must be in [1, N]");
  for (int t = 0; t < k; ++t)
    if (sigma[t] < 0 || sigma[t] > 2 * n)
      throw std::invalid_argument("build_sequence_qp: label out of range");
  if (rs.n != n || rs.eps != inst.eps)
    throw std::invalid_argument("build_sequence_qp: region set does not match instance");
  if (sigma[0] != classify(inst.x0, rs, tol))
    throw std::invalid_argument("build_sequence_qp: sigma(0) must equal classify(x0)");

  SequenceQp sq;
  sq.n = n;
  sq.m = m;
  sq.N = N;
  for (int t = 0; t < N; ++t)
    if (t >= k || sigma[t] != 0) sq.free_inputs.push_back(t);
  const int nf = static_cast<int>(sq.free_inputs.size());
  const int d = N * n + nf * m;

  QpProblem& qp = sq.qp;
  qp.H = Eigen::MatrixXd::Zero(d, d);
  qp.g = Eigen::VectorXd::Zero(d);
  for (int t = 1; t < N; ++t)
    qp.H.block(sq.state_offset(t), sq.state_offset(t), n, n) = 2.0 * inst.Q;
  qp.H.block(sq.state_offset(N), sq.state_offset(N), n, n) = 2.0 * inst.P;
  for (int j = 0; j < nf; ++j)
    qp.H.block(sq.input_offset(j), sq.input_offset(j), m, m) = 2.0 * inst.R;

  qp.A_eq = Eigen::MatrixXd::Zero(N * n, d);
  qp.b_eq = Eigen::VectorXd::Zero(N * n);
  int free_idx = 0;
  for (int t = 0; t < N; ++t) {
    qp.A_eq.block(t * n, sq.state_offset(t + 1), n, n) =
        Eigen::MatrixXd::Identity(n, n);
    if (t >= 1) qp.A_eq.block(t * n, sq.state_offset(t), n, n) = -inst.A;
    if (free_idx < nf && sq.free_inputs[free_idx] == t) {
      qp.A_eq.block(t * n, sq.input_offset(free_idx), n, m) = -inst.B;
      ++free_idx;
    }
    if (t == 0) qp.b_eq.segment(0, n) = inst.A * inst.x0;
  }

  int rows = 0;
  for (int t = 1; t < k; ++t) rows += sigma[t] == 0 ? 2 * n : 2 * n - 1;
  qp.A_in = Eigen::MatrixXd::Zero(rows, d);
  qp.b_in = Eigen::VectorXd::Zero(rows);
  // Zero-label states must satisfy the *strict* trigger rule, but a QP needs
  // a closed set; shrinking the box by the strict-interior tolerance keeps
  // optima attainable while leaving them robustly inside (a boundary-exact
  // plan would replay into trigger chatter in closed loop).
  const double box = inst.eps - tol.strict;
  int r0 = 0;
  for (int t = 1; t < k; ++t) {
    if (sigma[t] == 0) {
      qp.A_in.block(r0, sq.state_offset(t), n, n) = Eigen::MatrixXd::Identity(n, n);
      qp.b_in.segment(r0, n).setConstant(box);
      qp.A_in.block(r0 + n, sq.state_offset(t), n, n) =
          -Eigen::MatrixXd::Identity(n, n);
      qp.b_in.segment(r0 + n, n).setConstant(box);
      r0 += 2 * n;
    } else {
      const Region& reg = rs.regions[sigma[t] - 1];
      qp.A_in.block(r0, sq.state_offset(t), 2 * n - 1, n) = reg.T;
      qp.b_in.segment(r0, 2 * n - 1) = reg.d;
      r0 += 2 * n - 1;
    }
  }

  sq.cost_constant = inst.x0.dot(inst.Q * inst.x0);
  return sq;
}

}  // namespace etlq
