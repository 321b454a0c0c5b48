#include "adobo/cost.hpp"

#include <cmath>
#include <stdexcept>

#include "adobo/error.hpp"

namespace adobo {
namespace {

void check_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(name) + " must be square");
  if (!m.allFinite()) throw std::invalid_argument(std::string(name) + " has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  }
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

bool SoftBounds::is_vacuous() const {
  if (weight == 0.0) return true;
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isfinite(lower[i]) || std::isfinite(upper[i])) return false;
  }
  return true;
}

void CostSpec::validate() const {
  check_symmetric(Q, "Q");
  check_symmetric(R, "R");
  check_symmetric(Qf, "Qf");
  if (Qf.rows() != Q.rows()) throw DimensionError("Qf and Q sizes differ");
  if (x_ref.size() != nx()) throw DimensionError("x_ref has wrong dimension");
  if (u_ref.size() != nu()) throw DimensionError("u_ref has wrong dimension");
  if (min_eigenvalue(Q) < -1e-12 || min_eigenvalue(Qf) < -1e-12) {
    throw std::invalid_argument("Q and Qf must be positive semidefinite");
  }
  if (nu() > 0 && min_eigenvalue(R) <= 0.0) {
    throw std::invalid_argument("R must be positive definite");
  }
  if (soft_bounds) {
    const SoftBounds& sb = *soft_bounds;
    if (sb.lower.size() != nx() || sb.upper.size() != nx()) {
      throw DimensionError("soft bounds have wrong dimension");
    }
    if (!(sb.weight >= 0.0) || !std::isfinite(sb.weight)) {
      throw std::invalid_argument("soft bound weight must be finite and nonnegative");
    }
    for (Eigen::Index i = 0; i < nx(); ++i) {
      if (std::isnan(sb.lower[i]) || std::isnan(sb.upper[i]) || sb.lower[i] > sb.upper[i]) {
        throw std::invalid_argument("soft lower bound exceeds upper bound");
      }
    }
  }
}

CostSpec CostSpec::diagonal(const Vector& q, const Vector& r, const Vector& qf) {
  CostSpec c;
  c.Q = q.asDiagonal();
  c.R = r.asDiagonal();
  c.Qf = qf.asDiagonal();
  c.x_ref = Vector::Zero(q.size());
  c.u_ref = Vector::Zero(r.size());
  return c;
}

CostSpec CostSpec::identity(Eigen::Index nx, Eigen::Index nu) {
  return diagonal(Vector::Ones(nx), Vector::Ones(nu), Vector::Ones(nx));
}

double hinge_violation(const StateVector& x, const SoftBounds& bounds) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    total += std::max({0.0, bounds.lower[j] - x[j], x[j] - bounds.upper[j]});
  }
  return total;
}

double evaluate_cost(const Trajectory& traj, const CostSpec& cost) {
  if (!traj.is_consistent()) {
    throw DimensionError("trajectory must have one more state than controls");
  }
  const Eigen::Index nx = cost.nx();
  const Eigen::Index nu = cost.nu();
  for (const auto& x : traj.states) {
    if (x.size() != nx) throw DimensionError("trajectory state dimension does not match cost");
  }
  for (const auto& u : traj.controls) {
    if (u.size() != nu) throw DimensionError("trajectory control dimension does not match cost");
  }

  const int n = traj.horizon();
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vector dx = traj.states[k] - cost.x_ref;
    const Vector du = traj.controls[k] - cost.u_ref;
    total += dx.dot(cost.Q * dx) + du.dot(cost.R * du);
  }
  const Vector dxn = traj.states[n] - cost.x_ref;
  total += dxn.dot(cost.Qf * dxn);

  if (cost.soft_bounds && cost.soft_bounds->weight > 0.0) {
    double violation = 0.0;
    for (const auto& x : traj.states) violation += hinge_violation(x, *cost.soft_bounds);
    total += cost.soft_bounds->weight * violation;
  }
  return total;
}

}  // namespace adobo
