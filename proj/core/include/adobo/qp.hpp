#pragma once

#include <vector>

#include "adobo/types.hpp"

namespace adobo::control {

/// Condensed convex QP with hinge slacks:
///
///   min  1/2 u'Hu + f'u + constant + slack_weight * sum_j s_j
///   s.t. a_r'u + b_r <= s_{slack(r)}   for every hinge row r
///        s >= 0
///
/// The decision vector is z = (u, s).
struct QpProblem {
  Matrix H;
  Vector f;
  double constant = 0.0;
  Matrix hinge_rows;            // one row a_r per hinge piece
  Vector hinge_offsets;         // b_r
  std::vector<int> hinge_slack; // slack index of each row
  int num_slacks = 0;
  double slack_weight = 0.0;

  Eigen::Index num_controls() const { return H.rows(); }
  Eigen::Index num_variables() const { return H.rows() + num_slacks; }
  Eigen::Index num_constraints() const { return hinge_rows.rows() + num_slacks; }

  /// Generic form 1/2 z'Pz + q'z + constant, Gz <= h.
  struct Dense {
    Matrix P;
    Vector q;
    Matrix G;
    Vector h;
    double constant = 0.0;
  };
  Dense to_dense() const;

  double objective(const Vector& z) const;
  /// Objective after substituting the optimal slacks for fixed controls.
  double objective_for_controls(const Vector& u) const;
};

struct QpOptions {
  double kkt_tolerance = 1e-6;
  int max_iterations = 100;
};

struct QpSolution {
  Vector z;
  Vector multipliers;  // hinge rows first, then s >= 0 rows
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Infinity norm of the stacked KKT conditions: stationarity, primal and
/// dual feasibility, complementarity.
double kkt_residual(const QpProblem::Dense& qp, const Vector& z, const Vector& multipliers);

/// Mehrotra predictor-corrector interior point method. The Newton systems are
/// reduced onto the controls by eliminating the slack block. Throws
/// NumericalError("QP not converged ...") when the tolerance is not reached.
QpSolution solve_qp(const QpProblem& qp, const QpOptions& opts = {});

}  // namespace adobo::control
