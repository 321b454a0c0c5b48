#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace adobo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using StateVector = Vector;
using ControlVector = Vector;

/// Closed axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);
  /// The cube [lo, hi]^dim.
  static Box uniform(Eigen::Index dim, double lo, double hi);

  Eigen::Index dim() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;

  /// Affine map of the box onto [0,1]^dim and back.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& z) const;
};

/// Parameter vector searched over by the outer optimizer.
struct ThetaVector {
  Vector values;
  std::optional<Box> bounds;

  Eigen::Index dim() const { return values.size(); }
  bool in_bounds(double tol = 0.0) const;
};

struct LinearModel {
  Matrix A;
  Matrix B;

  Eigen::Index nx() const { return A.rows(); }
  Eigen::Index nu() const { return B.cols(); }
  bool is_finite() const;
};

struct Trajectory {
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;

  int horizon() const { return static_cast<int>(controls.size()); }
  bool is_consistent() const { return states.size() == controls.size() + 1; }
  bool is_finite() const;
};

/// Row-major A followed by row-major B.
ThetaVector pack_model(const LinearModel& model);

/// Inverse of pack_model. Throws DimensionError("theta/shape mismatch") when
/// theta does not have nx*(nx+nu) entries.
LinearModel unpack_model(const ThetaVector& theta, Eigen::Index nx, Eigen::Index nu);
LinearModel unpack_model(const Vector& theta, Eigen::Index nx, Eigen::Index nu);

/// Number of entries of a packed (A, B) pair.
inline Eigen::Index packed_size(Eigen::Index nx, Eigen::Index nu) { return nx * (nx + nu); }

}  // namespace adobo
