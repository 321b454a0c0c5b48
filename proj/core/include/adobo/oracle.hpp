#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adobo/cost.hpp"
#include "adobo/plants.hpp"
#include "adobo/types.hpp"

namespace adobo::oracle {

struct OracleOptions {
  /// Number of multistart runs: the zero sequence, the Jacobian-LQR warm
  /// start and seeds - 2 random sequences.
  int seeds = 4;
  std::uint64_t seed = 0;
  /// Required 2-norm of the final gradient.
  double gradient_tolerance = 1e-4;
  int max_iterations = 2000;
  /// Random starts draw each control from U[-random_scale, random_scale].
  double random_scale = 1.0;
  /// Softplus temperatures used, in order, to smooth soft state bounds.
  std::vector<double> smoothing = {1e-1, 1e-2, 1e-3};
};

struct OracleResult {
  double cost = 0.0;
  std::vector<ControlVector> controls;
  /// Optimality certificate: gradient norm, or KKT residual for the QP route.
  double gradient_norm = 0.0;
  bool certified = false;
  int starts_converged = 0;
  std::string method;  // "riccati" | "qp" | "multistart"
};

/// Exact optimum of a linear plant under a quadratic cost, via the Riccati
/// recursion on the true (A, B). Falls back to the equivalent QP when the
/// reference pair is not an equilibrium of the plant.
OracleResult oracle_linear(const plants::PlantSpec& plant, const CostSpec& cost,
                           const StateVector& x0, int horizon);

/// Exact optimum of a linear plant under a cost with soft state bounds
/// (a convex QP).
OracleResult oracle_linear_qp(const plants::PlantSpec& plant, const CostSpec& cost,
                              const StateVector& x0, int horizon);

/// Multistart open-loop trajectory optimization on the true plant with
/// central finite-difference gradients.
OracleResult oracle_nonlinear(const plants::PlantSpec& plant, const CostSpec& cost,
                              const StateVector& x0, int horizon, const OracleOptions& opts = {});

/// Picks the exact route for linear plants and multistart otherwise.
OracleResult compute_oracle(const plants::PlantSpec& plant, const CostSpec& cost,
                            const StateVector& x0, int horizon, const OracleOptions& opts = {});

/// Cost with each soft-bound hinge replaced by tau * log(1 + sum exp(piece / tau)).
double smoothed_cost(const Trajectory& traj, const CostSpec& cost, double tau);

}  // namespace adobo::oracle
