#include "adobo/plants.hpp"

#include <cmath>
#include <stdexcept>

#include "adobo/error.hpp"

namespace adobo::plants {
namespace {

void check_input(const PlantSpec& plant, const StateVector& x, const ControlVector& u) {
  if (x.size() != plant.nx() || u.size() != plant.nu()) {
    throw DimensionError("state/control dimension does not match plant " +
                         plant_name(plant.kind));
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw NumericalError("non-finite input to plant step");
  }
}

}  // namespace

Eigen::Index PlantSpec::nx() const {
  switch (kind) {
    case PlantKind::Dubins: return 3;
    case PlantKind::Linear1D: return 1;
    case PlantKind::Linear2D: return 2;
    case PlantKind::CartPole: return 4;
  }
  return 0;
}

Eigen::Index PlantSpec::nu() const {
  switch (kind) {
    case PlantKind::Dubins: return 2;
    case PlantKind::Linear1D:
    case PlantKind::Linear2D:
    case PlantKind::CartPole: return 1;
  }
  return 0;
}

void PlantSpec::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("plant dt must be positive");
  if (kind == PlantKind::CartPole) {
    if (!(cartpole.cart_mass > 0.0) || !(cartpole.pole_mass > 0.0) ||
        !(cartpole.pole_length > 0.0)) {
      throw std::invalid_argument("cart-pole masses and length must be positive");
    }
  }
}

PlantSpec make_plant(PlantKind kind) {
  PlantSpec p;
  p.kind = kind;
  p.dt = (kind == PlantKind::Dubins || kind == PlantKind::CartPole) ? 0.1 : 1.0;
  return p;
}

PlantSpec plant_from_name(std::string_view name) {
  if (name == "dubins") return make_plant(PlantKind::Dubins);
  if (name == "lin1d") return make_plant(PlantKind::Linear1D);
  if (name == "lin2d") return make_plant(PlantKind::Linear2D);
  if (name == "cartpole") return make_plant(PlantKind::CartPole);
  throw std::invalid_argument("unknown plant '" + std::string(name) + "'");
}

std::string plant_name(PlantKind kind) {
  switch (kind) {
    case PlantKind::Dubins: return "dubins";
    case PlantKind::Linear1D: return "lin1d";
    case PlantKind::Linear2D: return "lin2d";
    case PlantKind::CartPole: return "cartpole";
  }
  return "unknown";
}

Vector dubins_dynamics(const StateVector& x, const ControlVector& u) {
  // state (px, py, heading), control (speed, turn rate)
  Vector dx(3);
  dx << u[0] * std::cos(x[2]), u[0] * std::sin(x[2]), u[1];
  return dx;
}

Eigen::Vector2d cartpole_accelerations(const CartPoleParams& p, double psi, double psi_dot,
                                       double force) {
  // (M+m) xdd - m l cos(psi) psidd = F - m l psid^2 sin(psi)
  //     -cos(psi) xdd + l psidd     = g sin(psi)
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  const double ml = p.pole_mass * p.pole_length;
  const double a11 = p.cart_mass + p.pole_mass;
  const double a12 = -ml * c;
  const double a21 = -c;
  const double a22 = p.pole_length;
  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) < 1e-9) throw NumericalError("singular configuration");
  const double b1 = force - ml * psi_dot * psi_dot * s;
  const double b2 = p.gravity * s;
  return {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
}

Vector cartpole_dynamics(const CartPoleParams& p, const StateVector& x, const ControlVector& u) {
  // state (x, xdot, psi, psidot)
  const Eigen::Vector2d acc = cartpole_accelerations(p, x[2], x[3], u[0]);
  Vector dx(4);
  dx << x[1], acc[0], x[3], acc[1];
  return dx;
}

StateVector step(const PlantSpec& plant, const StateVector& x, const ControlVector& u) {
  check_input(plant, x, u);
  switch (plant.kind) {
    case PlantKind::Dubins:
      return x + plant.dt * dubins_dynamics(x, u);
    case PlantKind::CartPole:
      return x + plant.dt * cartpole_dynamics(plant.cartpole, x, u);
    case PlantKind::Linear1D:
    case PlantKind::Linear2D: {
      const LinearModel m = true_model(plant);
      return m.A * x + m.B * u;
    }
  }
  throw std::logic_error("unhandled plant kind");
}

Trajectory rollout(const PlantSpec& plant, const StateVector& x0,
                   const std::vector<ControlVector>& controls) {
  Trajectory traj;
  traj.states.reserve(controls.size() + 1);
  traj.controls = controls;
  traj.states.push_back(x0);
  for (const auto& u : controls) {
    StateVector next = step(plant, traj.states.back(), u);
    if (!next.allFinite()) throw DivergenceError("diverged");
    traj.states.push_back(std::move(next));
  }
  return traj;
}

LinearModel true_model(const PlantSpec& plant) {
  switch (plant.kind) {
    case PlantKind::Linear1D:
      return {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
    case PlantKind::Linear2D: {
      // x' = x + y, y' = y + u
      Matrix A(2, 2);
      A << 1, 1, 0, 1;
      Matrix B(2, 1);
      B << 0, 1;
      return {A, B};
    }
    default:
      throw std::invalid_argument("plant " + plant_name(plant.kind) + " is not linear");
  }
}

LinearModel linearize(const PlantSpec& plant, const StateVector& x, const ControlVector& u) {
  const Eigen::Index nx = plant.nx();
  const Eigen::Index nu = plant.nu();
  LinearModel m{Matrix(nx, nx), Matrix(nx, nu)};
  for (Eigen::Index j = 0; j < nx; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    m.A.col(j) = (step(plant, xp, u) - step(plant, xm, u)) / (2.0 * h);
  }
  for (Eigen::Index j = 0; j < nu; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(u[j]));
    Vector up = u, um = u;
    up[j] += h;
    um[j] -= h;
    m.B.col(j) = (step(plant, x, up) - step(plant, x, um)) / (2.0 * h);
  }
  return m;
}

}  // namespace adobo::plants
