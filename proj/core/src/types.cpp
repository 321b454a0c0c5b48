#include "adobo/types.hpp"

#include <algorithm>

#include "adobo/error.hpp"

namespace adobo {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw DimensionError("box bounds have different dimensions");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw std::invalid_argument("box lower bound exceeds upper bound");
    }
  }
}

Box Box::uniform(Eigen::Index dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Vector Box::to_unit(const Vector& x) const {
  Vector z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = upper[i] - lower[i];
    z[i] = w > 0.0 ? (x[i] - lower[i]) / w : 0.0;
  }
  return z;
}

Vector Box::from_unit(const Vector& z) const {
  return lower + (upper - lower).cwiseProduct(z);
}

bool ThetaVector::in_bounds(double tol) const {
  return !bounds || bounds->contains(values, tol);
}

bool LinearModel::is_finite() const { return A.allFinite() && B.allFinite(); }

bool Trajectory::is_finite() const {
  return std::all_of(states.begin(), states.end(), [](const Vector& v) { return v.allFinite(); }) &&
         std::all_of(controls.begin(), controls.end(),
                     [](const Vector& v) { return v.allFinite(); });
}

ThetaVector pack_model(const LinearModel& model) {
  const Eigen::Index nx = model.nx();
  const Eigen::Index nu = model.nu();
  if (model.A.cols() != nx || model.B.rows() != nx) {
    throw DimensionError("model matrices have inconsistent shapes");
  }
  ThetaVector theta;
  theta.values.resize(packed_size(nx, nu));
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < nx; ++r)
    for (Eigen::Index c = 0; c < nx; ++c) theta.values[k++] = model.A(r, c);
  for (Eigen::Index r = 0; r < nx; ++r)
    for (Eigen::Index c = 0; c < nu; ++c) theta.values[k++] = model.B(r, c);
  return theta;
}

LinearModel unpack_model(const Vector& theta, Eigen::Index nx, Eigen::Index nu) {
  if (nx <= 0 || nu <= 0 || theta.size() != packed_size(nx, nu)) {
    throw DimensionError("theta/shape mismatch");
  }
  LinearModel model{Matrix(nx, nx), Matrix(nx, nu)};
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < nx; ++r)
    for (Eigen::Index c = 0; c < nx; ++c) model.A(r, c) = theta[k++];
  for (Eigen::Index r = 0; r < nx; ++r)
    for (Eigen::Index c = 0; c < nu; ++c) model.B(r, c) = theta[k++];
  return model;
}

LinearModel unpack_model(const ThetaVector& theta, Eigen::Index nx, Eigen::Index nu) {
  return unpack_model(theta.values, nx, nu);
}

}  // namespace adobo
