#include "adobo/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "adobo/error.hpp"

namespace adobo::control {
namespace {

void check_shapes(const LinearModel& model, const CostSpec& cost) {
  if (model.A.rows() != model.A.cols() || model.B.rows() != model.A.rows()) {
    throw DimensionError("model matrices have inconsistent shapes");
  }
  if (cost.nx() != model.nx() || cost.nu() != model.nu()) {
    throw DimensionError("cost and model dimensions differ");
  }
}

}  // namespace

ControlVector LqrPolicy::control(const StateVector& x, int k) const {
  if (k < 0 || k >= horizon()) throw std::out_of_range("LQR step index out of range");
  return u_ref + gains[k] * (x - x_ref);
}

LqrPolicy lqr_backward(const LinearModel& model, const CostSpec& cost, int horizon) {
  check_shapes(model, cost);
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  if (!cost.is_quadratic()) throw std::invalid_argument("LQR requires a purely quadratic cost");

  const Matrix& A = model.A;
  const Matrix& B = model.B;
  LqrPolicy policy;
  policy.x_ref = cost.x_ref;
  policy.u_ref = cost.u_ref;
  policy.gains.resize(horizon);
  policy.value_mats.resize(horizon + 1);
  policy.value_mats[horizon] = cost.Qf;

  for (int k = horizon - 1; k >= 0; --k) {
    const Matrix& P = policy.value_mats[k + 1];
    const Matrix PB = P * B;
    const Matrix S = cost.R + B.transpose() * PB;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("Riccati breakdown");
    Matrix K = -llt.solve(PB.transpose() * A);
    Matrix Pk = cost.Q + A.transpose() * P * A + A.transpose() * PB * K;
    Pk = 0.5 * (Pk + Pk.transpose());
    if (!K.allFinite() || !Pk.allFinite()) throw NumericalError("Riccati breakdown");
    policy.gains[k] = std::move(K);
    policy.value_mats[k] = std::move(Pk);
  }
  return policy;
}

QpProblem build_mpc_qp(const LinearModel& model, const CostSpec& cost, const StateVector& x_init,
                       int k, int horizon) {
  check_shapes(model, cost);
  if (k < 0 || k >= horizon) throw std::invalid_argument("MPC window requires 0 <= k < N");
  if (x_init.size() != model.nx()) throw DimensionError("initial state has wrong dimension");

  const Eigen::Index nx = model.nx();
  const Eigen::Index nu = model.nu();
  const int steps = horizon - k;
  const Eigen::Index ns = steps * nx;
  const Eigen::Index nc = steps * nu;

  // Free response Phi x and forced response Gamma u of x_{k+1} .. x_N.
  std::vector<Matrix> AiB(steps);
  AiB[0] = model.B;
  for (int i = 1; i < steps; ++i) AiB[i] = model.A * AiB[i - 1];
  Vector free(ns);
  Matrix gamma = Matrix::Zero(ns, nc);
  Vector x = x_init;
  for (int i = 0; i < steps; ++i) {
    x = model.A * x;
    free.segment(i * nx, nx) = x;
    for (int j = 0; j <= i; ++j) gamma.block(i * nx, j * nu, nx, nu) = AiB[i - j];
  }

  Matrix qbar = Matrix::Zero(ns, ns);
  for (int i = 0; i < steps; ++i) {
    qbar.block(i * nx, i * nx, nx, nx) = (i == steps - 1) ? cost.Qf : cost.Q;
  }
  Vector x_target(ns), u_target(nc);
  for (int i = 0; i < steps; ++i) {
    x_target.segment(i * nx, nx) = cost.x_ref;
    u_target.segment(i * nu, nu) = cost.u_ref;
  }

  const Vector e = free - x_target;
  const Matrix qg = qbar * gamma;
  QpProblem qp;
  // 1/2 u'Hu = u'(Gamma'Q Gamma + R)u
  qp.H = 2.0 * gamma.transpose() * qg;
  for (int i = 0; i < steps; ++i) qp.H.block(i * nu, i * nu, nu, nu) += 2.0 * cost.R;
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.f = 2.0 * (qg.transpose() * e);
  for (int i = 0; i < steps; ++i) qp.f.segment(i * nu, nu) -= 2.0 * cost.R * cost.u_ref;
  const Vector dx0 = x_init - cost.x_ref;
  qp.constant = e.dot(qbar * e) + dx0.dot(cost.Q * dx0);
  for (int i = 0; i < steps; ++i) {
    qp.constant += cost.u_ref.dot(cost.R * cost.u_ref);
  }

  if (!cost.is_quadratic()) {
    const SoftBounds& sb = *cost.soft_bounds;
    qp.slack_weight = sb.weight;
    qp.constant += sb.weight * hinge_violation(x_init, sb);
    std::vector<Vector> rows;
    std::vector<double> offsets;
    for (int i = 0; i < steps; ++i) {
      for (Eigen::Index c = 0; c < nx; ++c) {
        const bool has_lo = std::isfinite(sb.lower[c]);
        const bool has_hi = std::isfinite(sb.upper[c]);
        if (!has_lo && !has_hi) continue;
        const Eigen::Index row = i * nx + c;
        if (has_lo) {
          rows.push_back(-gamma.row(row).transpose());
          offsets.push_back(sb.lower[c] - free[row]);
          qp.hinge_slack.push_back(qp.num_slacks);
        }
        if (has_hi) {
          rows.push_back(gamma.row(row).transpose());
          offsets.push_back(free[row] - sb.upper[c]);
          qp.hinge_slack.push_back(qp.num_slacks);
        }
        ++qp.num_slacks;
      }
    }
    qp.hinge_rows.resize(static_cast<Eigen::Index>(rows.size()), nc);
    qp.hinge_offsets.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      qp.hinge_rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      qp.hinge_offsets[static_cast<Eigen::Index>(i)] = offsets[i];
    }
  } else {
    qp.hinge_rows.resize(0, nc);
    qp.hinge_offsets.resize(0);
  }
  return qp;
}

MpcSolution mpc_solve_condensed(const LinearModel& model, const CostSpec& cost,
                                const StateVector& x_init, int k, int horizon,
                                const QpOptions& opts) {
  const QpProblem qp = build_mpc_qp(model, cost, x_init, k, horizon);
  const QpSolution sol = solve_qp(qp, opts);
  const Eigen::Index nu = model.nu();
  MpcSolution out;
  out.controls.reserve(static_cast<std::size_t>(horizon - k));
  for (int i = 0; i < horizon - k; ++i) out.controls.push_back(sol.z.segment(i * nu, nu));
  out.objective = sol.objective;
  out.kkt_residual = sol.kkt_residual;
  out.iterations = sol.iterations;
  return out;
}

namespace {

// Time-varying LQ subproblem over x_1..x_M, u_0..u_{M-1}:
//   min sum 1/2 x'Qt_i x + q_i'x + 1/2 u'Rt u + r_i'u
//   s.t. x_{i+1} = A x_i + B u_i + c_i.
// Stage matrices are factored once; the affine terms change per solve.
class LqSolver {
 public:
  LqSolver(const Matrix& A, const Matrix& B, const std::vector<Matrix>& Qt, const Matrix& Rt)
      : A_(A), B_(B), steps_(static_cast<int>(Qt.size()) - 1), K_(steps_), P_(steps_ + 1),
        llt_(steps_) {
    P_[steps_] = Qt[steps_];
    for (int i = steps_ - 1; i >= 0; --i) {
      const Matrix PB = P_[i + 1] * B_;
      llt_[i].compute(Rt + B_.transpose() * PB);
      if (llt_[i].info() != Eigen::Success) throw NumericalError("Riccati breakdown");
      const Matrix hux = PB.transpose() * A_;
      K_[i] = -llt_[i].solve(hux);
      if (i > 0) {
        Matrix Pi = Qt[i] + A_.transpose() * P_[i + 1] * A_ + hux.transpose() * K_[i];
        P_[i] = 0.5 * (Pi + Pi.transpose());
        if (!P_[i].allFinite()) throw NumericalError("Riccati breakdown");
      }
    }
  }

  struct Solution {
    std::vector<Vector> x;   // x_0 .. x_M
    std::vector<Vector> u;   // u_0 .. u_{M-1}
    std::vector<Vector> nu;  // dynamics multipliers, index 1..M
  };

  Solution solve(const StateVector& x0, const std::vector<Vector>& q, const std::vector<Vector>& r,
                 const std::vector<Vector>& c) const {
    std::vector<Vector> p(steps_ + 1), kff(steps_);
    p[steps_] = q[steps_];
    for (int i = steps_ - 1; i >= 0; --i) {
      const Vector pc = P_[i + 1] * c[i] + p[i + 1];
      kff[i] = -llt_[i].solve(r[i] + B_.transpose() * pc);
      if (i > 0) {
        p[i] = q[i] + A_.transpose() * pc + (B_.transpose() * P_[i + 1] * A_).transpose() * kff[i];
      }
    }
    Solution s;
    s.x.push_back(x0);
    s.nu.resize(steps_ + 1);
    for (int i = 0; i < steps_; ++i) {
      s.u.push_back(K_[i] * s.x[i] + kff[i]);
      s.x.push_back(A_ * s.x[i] + B_ * s.u[i] + c[i]);
      s.nu[i + 1] = -(P_[i + 1] * s.x[i + 1] + p[i + 1]);
      if (!s.x.back().allFinite() || !s.u.back().allFinite()) {
        throw NumericalError("Riccati breakdown");
      }
    }
    return s;
  }

 private:
  const Matrix& A_;
  const Matrix& B_;
  int steps_;
  std::vector<Matrix> K_;
  std::vector<Matrix> P_;
  std::vector<Eigen::LLT<Matrix>> llt_;
};

// Slack s_p >= max(0, lo - x_ij, x_ij - hi) for one bounded component.
struct Piece {
  int step;  // 1..M
  Eigen::Index comp;
  double lo;
  double hi;
};

// Inequality row c(z) >= 0: kind 0 is s >= 0, kind 1 is s + x - lo, kind 2 is s - x + hi.
struct Row {
  int piece;
  int kind;
};

double window_cost(const CostSpec& cost, const std::vector<Vector>& x, const std::vector<Vector>& u) {
  const int steps = static_cast<int>(u.size());
  double j = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const Vector dx = x[i] - cost.x_ref;
    j += dx.dot((i == steps ? cost.Qf : cost.Q) * dx);
    if (i < steps) {
      const Vector du = u[i] - cost.u_ref;
      j += du.dot(cost.R * du);
    }
    if (cost.soft_bounds) j += cost.soft_bounds->weight * hinge_violation(x[i], *cost.soft_bounds);
  }
  return j;
}

}  // namespace

MpcSolution mpc_solve(const LinearModel& model, const CostSpec& cost, const StateVector& x_init,
                      int k, int horizon, const QpOptions& opts) {
  check_shapes(model, cost);
  if (k < 0 || k >= horizon) throw std::invalid_argument("MPC window requires 0 <= k < N");
  if (x_init.size() != model.nx()) throw DimensionError("initial state has wrong dimension");

  const Matrix& A = model.A;
  const Matrix& B = model.B;
  const Eigen::Index nx = model.nx();
  const int steps = horizon - k;

  std::vector<Matrix> Qt(steps + 1);
  for (int i = 1; i <= steps; ++i) Qt[i] = 2.0 * (i == steps ? cost.Qf : cost.Q);
  const Matrix Rt = 2.0 * cost.R;

  std::vector<Piece> pieces;
  double weight = 0.0;
  if (cost.soft_bounds && cost.soft_bounds->weight > 0.0 && !cost.soft_bounds->is_vacuous()) {
    const SoftBounds& sb = *cost.soft_bounds;
    weight = sb.weight;
    for (int i = 1; i <= steps; ++i) {
      for (Eigen::Index c = 0; c < nx; ++c) {
        if (std::isfinite(sb.lower[c]) || std::isfinite(sb.upper[c])) {
          pieces.push_back({i, c, sb.lower[c], sb.upper[c]});
        }
      }
    }
  }
  std::vector<Row> rows;
  for (int p = 0; p < static_cast<int>(pieces.size()); ++p) {
    rows.push_back({p, 0});
    if (std::isfinite(pieces[p].lo)) rows.push_back({p, 1});
    if (std::isfinite(pieces[p].hi)) rows.push_back({p, 2});
  }

  // Gradient of the quadratic part.
  auto grad_x = [&](int i, const Vector& x) -> Vector { return Qt[i] * (x - cost.x_ref); };
  auto grad_u = [&](const Vector& u) -> Vector { return Rt * (u - cost.u_ref); };

  // Unconstrained optimum: one LQ solve in absolute coordinates.
  std::vector<Vector> q(steps + 1), r(steps), c(steps, Vector::Zero(nx));
  for (int i = 1; i <= steps; ++i) q[i] = -Qt[i] * cost.x_ref;
  for (int i = 0; i < steps; ++i) r[i] = -Rt * cost.u_ref;

  MpcSolution out;
  if (rows.empty()) {
    const LqSolver lq(A, B, Qt, Rt);
    const auto sol = lq.solve(x_init, q, r, c);
    out.controls = sol.u;
    out.objective = window_cost(cost, sol.x, sol.u);
    return out;
  }

  std::vector<Vector> x, u, mult;
  {
    const LqSolver lq(A, B, Qt, Rt);
    const auto sol = lq.solve(x_init, q, r, c);
    x = sol.x;
    u = sol.u;
    mult.assign(steps + 1, Vector::Zero(nx));
  }
  const auto np = static_cast<Eigen::Index>(pieces.size());
  const auto m = static_cast<Eigen::Index>(rows.size());
  Vector s(np), w(m), lam(m);
  auto row_value = [&](const Row& row, const std::vector<Vector>& xs, const Vector& ss) {
    const Piece& pc = pieces[row.piece];
    const double xv = xs[pc.step][pc.comp];
    switch (row.kind) {
      case 1: return ss[row.piece] + xv - pc.lo;
      case 2: return ss[row.piece] - xv + pc.hi;
      default: return ss[row.piece];
    }
  };
  for (Eigen::Index p = 0; p < np; ++p) {
    const Piece& pc = pieces[p];
    const double xv = x[pc.step][pc.comp];
    double viol = 0.0;
    if (std::isfinite(pc.lo)) viol = std::max(viol, pc.lo - xv);
    if (std::isfinite(pc.hi)) viol = std::max(viol, xv - pc.hi);
    s[p] = viol + 1.0;
  }
  std::vector<int> rows_per_piece(np, 0);
  for (const Row& row : rows) ++rows_per_piece[row.piece];
  for (Eigen::Index i = 0; i < m; ++i) {
    w[i] = row_value(rows[i], x, s);
    lam[i] = std::max(1.0, weight / rows_per_piece[rows[i].piece]);
  }

  // Residuals of the KKT system.
  std::vector<Vector> rdx(steps + 1), rdu(steps), re(steps + 1);
  Vector rds(np), ri(m);
  auto residuals = [&]() {
    for (int i = 1; i <= steps; ++i) {
      rdx[i] = grad_x(i, x[i]) + mult[i];
      if (i < steps) rdx[i] -= A.transpose() * mult[i + 1];
    }
    for (int i = 0; i < steps; ++i) {
      rdu[i] = grad_u(u[i]) - B.transpose() * mult[i + 1];
      re[i + 1] = x[i + 1] - A * x[i] - B * u[i];
    }
    rds.setConstant(weight);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Row& row = rows[j];
      const Piece& pc = pieces[row.piece];
      rds[row.piece] -= lam[j];
      if (row.kind == 1) rdx[pc.step][pc.comp] -= lam[j];
      if (row.kind == 2) rdx[pc.step][pc.comp] += lam[j];
      ri[j] = row_value(row, x, s) - w[j];
    }
    double res = std::max(rds.lpNorm<Eigen::Infinity>(), ri.lpNorm<Eigen::Infinity>());
    for (int i = 1; i <= steps; ++i) {
      res = std::max({res, rdx[i].lpNorm<Eigen::Infinity>(), re[i].lpNorm<Eigen::Infinity>()});
    }
    for (int i = 0; i < steps; ++i) res = std::max(res, rdu[i].lpNorm<Eigen::Infinity>());
    return std::max(res, (w.array() * lam.array()).maxCoeff());
  };

  struct Step {
    std::vector<Vector> dx, du, dmult;
    Vector ds, dw, dlam;
  };

  const double inf = std::numeric_limits<double>::infinity();
  double res = residuals();
  int iter = 0;
  for (; iter < opts.max_iterations && res > opts.kkt_tolerance; ++iter) {
    const Vector d = lam.array() / w.array();
    // Slack elimination: per piece 2x2 block in (x_ij, s_p).
    Vector xx = Vector::Zero(np), xs = Vector::Zero(np), ss = Vector::Zero(np);
    for (Eigen::Index j = 0; j < m; ++j) {
      const int p = rows[j].piece;
      ss[p] += d[j];
      if (rows[j].kind == 1) {
        xx[p] += d[j];
        xs[p] += d[j];
      } else if (rows[j].kind == 2) {
        xx[p] += d[j];
        xs[p] -= d[j];
      }
    }
    std::vector<Matrix> Qd = Qt;
    for (Eigen::Index p = 0; p < np; ++p) {
      Qd[pieces[p].step](pieces[p].comp, pieces[p].comp) += xx[p] - xs[p] * xs[p] / ss[p];
    }
    const LqSolver lq(A, B, Qd, Rt);

    auto newton = [&](const Vector& rc) {
      const Vector g = (rc.array() + lam.array() * ri.array()) / w.array();
      std::vector<Vector> bx(steps + 1);
      for (int i = 1; i <= steps; ++i) bx[i] = -rdx[i];
      Vector bs = -rds;
      for (Eigen::Index j = 0; j < m; ++j) {
        const Row& row = rows[j];
        const Piece& pc = pieces[row.piece];
        bs[row.piece] -= g[j];
        if (row.kind == 1) bx[pc.step][pc.comp] -= g[j];
        if (row.kind == 2) bx[pc.step][pc.comp] += g[j];
      }
      for (Eigen::Index p = 0; p < np; ++p) {
        bx[pieces[p].step][pieces[p].comp] -= xs[p] * bs[p] / ss[p];
      }
      std::vector<Vector> lq_q(steps + 1), lq_r(steps), lq_c(steps);
      for (int i = 1; i <= steps; ++i) lq_q[i] = -bx[i];
      for (int i = 0; i < steps; ++i) {
        lq_r[i] = rdu[i];
        lq_c[i] = -re[i + 1];
      }
      const auto sol = lq.solve(Vector::Zero(nx), lq_q, lq_r, lq_c);
      Step st;
      st.dx = sol.x;
      st.du = sol.u;
      st.dmult = sol.nu;
      st.ds.resize(np);
      for (Eigen::Index p = 0; p < np; ++p) {
        st.ds[p] = (bs[p] - xs[p] * st.dx[pieces[p].step][pieces[p].comp]) / ss[p];
      }
      st.dw.resize(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Row& row = rows[j];
        const double dxv = st.dx[pieces[row.piece].step][pieces[row.piece].comp];
        double gdz = st.ds[row.piece];
        if (row.kind == 1) gdz += dxv;
        if (row.kind == 2) gdz -= dxv;
        st.dw[j] = gdz + ri[j];
      }
      st.dlam = -(g.array() + d.array() * (st.dw.array() - ri.array()));
      return st;
    };
    auto max_step = [&](const Step& st) {
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (st.dw[j] < 0.0) alpha = std::min(alpha, -w[j] / st.dw[j]);
        if (st.dlam[j] < 0.0) alpha = std::min(alpha, -lam[j] / st.dlam[j]);
      }
      return alpha;
    };

    const double mu = w.dot(lam) / static_cast<double>(m);
    const Vector wl = w.array() * lam.array();
    const Step aff = newton(wl);
    const double a_aff = max_step(aff);
    const double mu_aff =
        (w + a_aff * aff.dw).dot(lam + a_aff * aff.dlam) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3.0);
    const Vector rc = wl.array() + aff.dw.array() * aff.dlam.array() - sigma * mu;
    const Step st = newton(rc);
    const double alpha = std::min(1.0, 0.99 * max_step(st));
    if (!(alpha > 0.0) || alpha == inf) break;

    for (int i = 1; i <= steps; ++i) {
      x[i] += alpha * st.dx[i];
      mult[i] += alpha * st.dmult[i];
    }
    for (int i = 0; i < steps; ++i) u[i] += alpha * st.du[i];
    s += alpha * st.ds;
    w += alpha * st.dw;
    lam += alpha * st.dlam;
    res = residuals();
    if (!std::isfinite(res)) break;
  }
  if (!(res <= opts.kkt_tolerance)) {
    std::ostringstream msg;
    msg << "QP not converged (residual " << res << ")";
    throw NumericalError(msg.str());
  }
  out.controls = u;
  out.objective = window_cost(cost, x, u);
  out.kkt_residual = res;
  out.iterations = iter;
  return out;
}

Policy synthesize(const LinearModel& model, const CostSpec& cost, int horizon, ControllerKind kind) {
  if (kind == ControllerKind::Lqr) {
    if (!cost.is_quadratic()) throw std::invalid_argument("LQR controller requires a quadratic cost");
    return lqr_backward(model, cost, horizon);
  }
  check_shapes(model, cost);
  return MpcPolicy{model, cost, horizon, {}};
}

ControlVector policy_first_control(const Policy& policy, const StateVector& x, int k) {
  if (const auto* lqr = std::get_if<LqrPolicy>(&policy)) return lqr->control(x, k);
  const auto& mpc = std::get<MpcPolicy>(policy);
  return mpc_solve(mpc.model, mpc.cost, x, k, mpc.horizon, mpc.options).controls.front();
}

}  // namespace adobo::control
