#include "adobo/qp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "adobo/error.hpp"

namespace adobo::control {
namespace {

// Structured products with G = [A -E; 0 -I] where E scatters rows to slacks.
struct Ops {
  const QpProblem& qp;

  Vector G_times(const Vector& u, const Vector& s) const {
    const Eigen::Index r = qp.hinge_rows.rows();
    Vector out(r + qp.num_slacks);
    out.head(r) = qp.hinge_rows * u;
    for (Eigen::Index i = 0; i < r; ++i) out[i] -= s[qp.hinge_slack[i]];
    out.tail(qp.num_slacks) = -s;
    return out;
  }

  void Gt_times(const Vector& lam, Vector& gu, Vector& gs) const {
    const Eigen::Index r = qp.hinge_rows.rows();
    gu = qp.hinge_rows.transpose() * lam.head(r);
    gs = -lam.tail(qp.num_slacks);
    for (Eigen::Index i = 0; i < r; ++i) gs[qp.hinge_slack[i]] -= lam[i];
  }

  Vector h() const {
    Vector out = Vector::Zero(qp.hinge_rows.rows() + qp.num_slacks);
    out.head(qp.hinge_rows.rows()) = -qp.hinge_offsets;
    return out;
  }
};

}  // namespace

QpProblem::Dense QpProblem::to_dense() const {
  const Eigen::Index n = num_controls();
  const Eigen::Index p = num_slacks;
  const Eigen::Index r = hinge_rows.rows();
  Dense d;
  d.P = Matrix::Zero(n + p, n + p);
  d.P.topLeftCorner(n, n) = H;
  d.q = Vector::Zero(n + p);
  d.q.head(n) = f;
  d.q.tail(p).setConstant(slack_weight);
  d.G = Matrix::Zero(r + p, n + p);
  d.h = Vector::Zero(r + p);
  for (Eigen::Index i = 0; i < r; ++i) {
    d.G.block(i, 0, 1, n) = hinge_rows.row(i);
    d.G(i, n + hinge_slack[i]) = -1.0;
    d.h[i] = -hinge_offsets[i];
  }
  for (Eigen::Index j = 0; j < p; ++j) d.G(r + j, n + j) = -1.0;
  d.constant = constant;
  return d;
}

double QpProblem::objective(const Vector& z) const {
  const Eigen::Index n = num_controls();
  const Vector u = z.head(n);
  return 0.5 * u.dot(H * u) + f.dot(u) + constant + slack_weight * z.tail(num_slacks).sum();
}

double QpProblem::objective_for_controls(const Vector& u) const {
  Vector s = Vector::Zero(num_slacks);
  const Vector pieces = hinge_rows * u + hinge_offsets;
  for (Eigen::Index i = 0; i < pieces.size(); ++i) {
    s[hinge_slack[i]] = std::max(s[hinge_slack[i]], pieces[i]);
  }
  return 0.5 * u.dot(H * u) + f.dot(u) + constant + slack_weight * s.sum();
}

double kkt_residual(const QpProblem::Dense& qp, const Vector& z, const Vector& multipliers) {
  const Vector slack = qp.h - qp.G * z;
  double res = (qp.P * z + qp.q + qp.G.transpose() * multipliers).lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    res = std::max(res, std::max(0.0, -slack[i]));
    res = std::max(res, std::max(0.0, -multipliers[i]));
    res = std::max(res, std::abs(multipliers[i] * slack[i]));
  }
  return res;
}

QpSolution solve_qp(const QpProblem& qp, const QpOptions& opts) {
  const Eigen::Index n = qp.num_controls();
  const Eigen::Index p = qp.num_slacks;
  const Eigen::Index r = qp.hinge_rows.rows();
  const Eigen::Index m = r + p;
  if (qp.f.size() != n || qp.H.cols() != n || (r > 0 && qp.hinge_rows.cols() != n) ||
      qp.hinge_offsets.size() != r || static_cast<Eigen::Index>(qp.hinge_slack.size()) != r) {
    throw DimensionError("inconsistent QP dimensions");
  }

  QpSolution sol;
  Eigen::LLT<Matrix> hllt(qp.H);
  if (hllt.info() != Eigen::Success) throw NumericalError("QP Hessian is not positive definite");
  const Vector u_free = hllt.solve(-qp.f);

  if (m == 0) {
    sol.z = u_free;
    sol.multipliers = Vector();
    sol.objective = qp.objective(sol.z);
    sol.kkt_residual = (qp.H * u_free + qp.f).lpNorm<Eigen::Infinity>();
    if (!sol.z.allFinite() || sol.kkt_residual > opts.kkt_tolerance * std::max(1.0, qp.f.lpNorm<Eigen::Infinity>())) {
      std::ostringstream msg;
      msg << "QP not converged (residual " << sol.kkt_residual << ")";
      throw NumericalError(msg.str());
    }
    return sol;
  }

  const Ops ops{qp};
  const Vector h = ops.h();
  Vector u = u_free;
  Vector s = Vector::Zero(p);
  {
    const Vector pieces = qp.hinge_rows * u + qp.hinge_offsets;
    for (Eigen::Index i = 0; i < r; ++i) s[qp.hinge_slack[i]] = std::max(s[qp.hinge_slack[i]], pieces[i]);
    s.array() += 1.0;
  }
  Vector t = h - ops.G_times(u, s);
  Vector lam = Vector::Constant(m, std::max(1.0, 0.5 * qp.slack_weight));

  auto residuals = [&](Vector& rd_u, Vector& rd_s, Vector& rp) {
    Vector gu, gs;
    ops.Gt_times(lam, gu, gs);
    rd_u = qp.H * u + qp.f + gu;
    rd_s = Vector::Constant(p, qp.slack_weight) + gs;
    rp = ops.G_times(u, s) + t - h;
  };

  auto dense_residual = [&]() {
    Vector gu, gs;
    ops.Gt_times(lam, gu, gs);
    double res = (qp.H * u + qp.f + gu).lpNorm<Eigen::Infinity>();
    res = std::max(res, (Vector::Constant(p, qp.slack_weight) + gs).lpNorm<Eigen::Infinity>());
    const Vector slack = h - ops.G_times(u, s);
    for (Eigen::Index i = 0; i < m; ++i) {
      res = std::max(res, std::max(0.0, -slack[i]));
      res = std::max(res, std::max(0.0, -lam[i]));
      res = std::max(res, std::abs(lam[i] * slack[i]));
    }
    return res;
  };

  Matrix M(n, n);
  Matrix W(n, p);
  Vector ss(p);
  Eigen::LLT<Matrix> llt;

  // Solves the reduced Newton system for given residuals.
  auto newton = [&](const Vector& rd_u, const Vector& rd_s, const Vector& rp, const Vector& rc,
                    Vector& du, Vector& ds, Vector& dl, Vector& dt) {
    const Vector D = lam.cwiseQuotient(t);
    const Vector v = D.cwiseProduct(rp) - rc.cwiseQuotient(t);
    Vector gu, gs;
    ops.Gt_times(v, gu, gs);
    const Vector rhs_u = -rd_u - gu;
    const Vector rhs_s = -rd_s - gs;
    const Vector y = W * ss.cwiseInverse().cwiseProduct(rhs_s);
    du = llt.solve(rhs_u - y);
    ds = (rhs_s - W.transpose() * du).cwiseQuotient(ss);
    const Vector gdz = ops.G_times(du, ds);
    dl = D.cwiseProduct(gdz + rp) - rc.cwiseQuotient(t);
    dt = -rp - gdz;
  };

  auto max_step = [](const Vector& x, const Vector& dx) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
    return alpha;
  };

  Vector rd_u, rd_s, rp;
  for (sol.iterations = 0; sol.iterations < opts.max_iterations; ++sol.iterations) {
    residuals(rd_u, rd_s, rp);
    const double mu = t.dot(lam) / static_cast<double>(m);
    const double res = std::max({rd_u.lpNorm<Eigen::Infinity>(), rd_s.lpNorm<Eigen::Infinity>(),
                                 rp.lpNorm<Eigen::Infinity>()});
    if (res <= opts.kkt_tolerance && dense_residual() <= opts.kkt_tolerance) break;

    // reduced matrix M = H + A'DA - W diag(1/ss) W'
    const Vector D = lam.cwiseQuotient(t);
    const Vector Dh = D.head(r);
    M = qp.H;
    M.noalias() += qp.hinge_rows.transpose() * Dh.asDiagonal() * qp.hinge_rows;
    W.setZero();
    ss = D.tail(p);
    for (Eigen::Index i = 0; i < r; ++i) {
      W.col(qp.hinge_slack[i]).noalias() -= Dh[i] * qp.hinge_rows.row(i).transpose();
      ss[qp.hinge_slack[i]] += Dh[i];
    }
    M.noalias() -= W * ss.cwiseInverse().asDiagonal() * W.transpose();
    M = 0.5 * (M + M.transpose());
    llt.compute(M);
    const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    for (double reg = 1e-14; llt.info() != Eigen::Success && reg <= 1e-8; reg *= 100.0) {
      M.diagonal().array() += reg * scale;
      llt.compute(M);
    }
    if (llt.info() != Eigen::Success) break;

    Vector du, ds, dl, dt;
    const Vector rc_aff = t.cwiseProduct(lam);
    newton(rd_u, rd_s, rp, rc_aff, du, ds, dl, dt);
    const double a_aff = std::min(max_step(t, dt), max_step(lam, dl));
    const double mu_aff = (t + a_aff * dt).dot(lam + a_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    const Vector rc = rc_aff + dt.cwiseProduct(dl) - Vector::Constant(m, sigma * mu);
    newton(rd_u, rd_s, rp, rc, du, ds, dl, dt);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(t, dt), max_step(lam, dl)));
    u += alpha * du;
    s += alpha * ds;
    lam += alpha * dl;
    t += alpha * dt;
    if (!u.allFinite() || !lam.allFinite()) break;
  }

  sol.z.resize(n + p);
  sol.z << u, s;
  sol.multipliers = lam;
  sol.objective = qp.objective(sol.z);
  sol.kkt_residual = u.allFinite() && lam.allFinite() ? dense_residual()
                                                      : std::numeric_limits<double>::infinity();
  if (!(sol.kkt_residual <= opts.kkt_tolerance)) {
    std::ostringstream msg;
    msg << "QP not converged (residual " << sol.kkt_residual << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

}  // namespace adobo::control
