#pragma once

#include <optional>

#include "adobo/types.hpp"

namespace adobo {

/// Componentwise soft state bounds. Infinite entries disable a side.
struct SoftBounds {
  Vector lower;
  Vector upper;
  double weight = 0.0;

  /// True when the weight is zero or every bound is infinite.
  bool is_vacuous() const;
};

/// Quadratic tracking cost with an optional hinge penalty on the states:
///
///   sum_{k<N} (x_k-x*)'Q(x_k-x*) + (u_k-u*)'R(u_k-u*) + (x_N-x*)'Qf(x_N-x*)
///     + weight * sum_{i<=N} sum_j max(0, lo_j - x_ij, x_ij - hi_j)
struct CostSpec {
  Matrix Q;
  Matrix R;
  Matrix Qf;
  Vector x_ref;
  Vector u_ref;
  std::optional<SoftBounds> soft_bounds;

  Eigen::Index nx() const { return Q.rows(); }
  Eigen::Index nu() const { return R.rows(); }

  /// True when there is no active hinge term.
  bool is_quadratic() const { return !soft_bounds || soft_bounds->is_vacuous(); }

  /// Checks symmetry, definiteness and shapes; throws on violation.
  void validate() const;

  /// Diagonal penalties with zero references and no soft bounds.
  static CostSpec diagonal(const Vector& q, const Vector& r, const Vector& qf);
  static CostSpec identity(Eigen::Index nx, Eigen::Index nu);
};

/// Hinge penalty of a single state, without the weight.
double hinge_violation(const StateVector& x, const SoftBounds& bounds);

double evaluate_cost(const Trajectory& traj, const CostSpec& cost);

}  // namespace adobo
