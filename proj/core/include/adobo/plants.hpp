#pragma once

#include <string>
#include <string_view>

#include "adobo/types.hpp"

namespace adobo::plants {

enum class PlantKind { Dubins, Linear1D, Linear2D, CartPole };

struct CartPoleParams {
  double cart_mass = 1.5;     // kg
  double pole_mass = 0.175;   // kg
  double pole_length = 0.28;  // m
  double gravity = 9.81;      // m/s^2
};

struct PlantSpec {
  PlantKind kind = PlantKind::Linear1D;
  /// Integration step in seconds for continuous plants; unused by the
  /// discrete linear plants.
  double dt = 0.1;
  CartPoleParams cartpole;

  Eigen::Index nx() const;
  Eigen::Index nu() const;
  bool is_linear() const { return kind == PlantKind::Linear1D || kind == PlantKind::Linear2D; }
  void validate() const;
};

PlantSpec make_plant(PlantKind kind);

/// "dubins" | "lin1d" | "lin2d" | "cartpole". Throws std::invalid_argument.
PlantSpec plant_from_name(std::string_view name);
std::string plant_name(PlantKind kind);

/// Continuous-time vector field of the Dubins car and the cart-pole.
Vector dubins_dynamics(const StateVector& x, const ControlVector& u);
Vector cartpole_dynamics(const CartPoleParams& p, const StateVector& x, const ControlVector& u);

/// Cart and pole accelerations solving the coupled equations of motion.
/// Throws NumericalError("singular configuration") when the 2x2 mass matrix
/// degenerates.
Eigen::Vector2d cartpole_accelerations(const CartPoleParams& p, double psi, double psi_dot,
                                       double force);

/// One discrete step x' = f(x, u). Forward Euler for continuous plants.
StateVector step(const PlantSpec& plant, const StateVector& x, const ControlVector& u);

/// Throws DivergenceError("diverged") as soon as a state is not finite.
Trajectory rollout(const PlantSpec& plant, const StateVector& x0,
                   const std::vector<ControlVector>& controls);

/// Exact (A, B) of the linear plants.
LinearModel true_model(const PlantSpec& plant);

/// Central finite-difference Jacobians of the discrete step about (x, u).
LinearModel linearize(const PlantSpec& plant, const StateVector& x, const ControlVector& u);

}  // namespace adobo::plants
