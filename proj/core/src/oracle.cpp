#include "adobo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adobo/control.hpp"
#include "adobo/error.hpp"
#include "adobo/optimize.hpp"

namespace adobo::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const plants::PlantSpec& plant, const CostSpec& cost, const StateVector& x0,
                  int horizon) {
  plant.validate();
  cost.validate();
  if (cost.nx() != plant.nx() || cost.nu() != plant.nu() || x0.size() != plant.nx()) {
    throw DimensionError("oracle inputs have inconsistent dimensions");
  }
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
}

std::vector<ControlVector> split(const Vector& flat, Eigen::Index nu) {
  std::vector<ControlVector> out;
  for (Eigen::Index i = 0; i + nu <= flat.size(); i += nu) out.emplace_back(flat.segment(i, nu));
  return out;
}

Vector flatten(const std::vector<ControlVector>& u, Eigen::Index nu) {
  Vector flat(static_cast<Eigen::Index>(u.size()) * nu);
  for (std::size_t i = 0; i < u.size(); ++i) {
    flat.segment(static_cast<Eigen::Index>(i) * nu, nu) = u[i];
  }
  return flat;
}

double smooth_piece(double a, double b, double tau) {
  const double m = std::max({0.0, a, b});
  double s = std::exp(-m / tau);
  if (std::isfinite(a)) s += std::exp((a - m) / tau);
  if (std::isfinite(b)) s += std::exp((b - m) / tau);
  return m + tau * std::log(s);
}

double trajectory_cost(const Trajectory& traj, const CostSpec& cost, double tau) {
  const double j = tau > 0.0 ? smoothed_cost(traj, cost, tau) : evaluate_cost(traj, cost);
  return std::isfinite(j) ? j : kInf;
}

double rollout_cost(const plants::PlantSpec& plant, const CostSpec& cost, const StateVector& x0,
                    const Vector& flat, double tau) {
  try {
    return trajectory_cost(plants::rollout(plant, x0, split(flat, plant.nu())), cost, tau);
  } catch (const NumericalError&) {
    return kInf;
  }
}

// Open-loop sequence in the coordinates u_k = w_k + K_k (x_k - x*), with fixed
// LQR gains of the Jacobian. w -> u is a bijection.
struct Shooting {
  const plants::PlantSpec& plant;
  const CostSpec& cost;
  const StateVector& x0;
  std::vector<Matrix> gains;

  Trajectory simulate(const Vector& w) const {
    const Eigen::Index nu = plant.nu();
    Trajectory traj;
    traj.states.push_back(x0);
    for (std::size_t k = 0; k < gains.size(); ++k) {
      const StateVector& x = traj.states.back();
      ControlVector u = w.segment(static_cast<Eigen::Index>(k) * nu, nu) + gains[k] * (x - cost.x_ref);
      StateVector next = plants::step(plant, x, u);
      if (!next.allFinite() || next.norm() > 1e8) throw DivergenceError("diverged");
      traj.controls.push_back(std::move(u));
      traj.states.push_back(std::move(next));
    }
    return traj;
  }

  double value(const Vector& w, double tau) const {
    try {
      return trajectory_cost(simulate(w), cost, tau);
    } catch (const NumericalError&) {
      return kInf;
    }
  }

  Vector to_w(const Vector& flat_u) const {
    const Eigen::Index nu = plant.nu();
    const Trajectory traj = plants::rollout(plant, x0, split(flat_u, nu));
    Vector w(flat_u.size());
    for (std::size_t k = 0; k < gains.size(); ++k) {
      w.segment(static_cast<Eigen::Index>(k) * nu, nu) =
          traj.controls[k] - gains[k] * (traj.states[k] - cost.x_ref);
    }
    return w;
  }

  Vector to_u(const Vector& w) const { return flatten(simulate(w).controls, plant.nu()); }
};

std::vector<Matrix> stabilizing_gains(const plants::PlantSpec& plant, const CostSpec& cost,
                                      int horizon) {
  try {
    const LinearModel lin = plants::linearize(plant, cost.x_ref, cost.u_ref);
    CostSpec quadratic = cost;
    quadratic.soft_bounds.reset();
    return control::lqr_backward(lin, quadratic, horizon).gains;
  } catch (const std::exception&) {
    return std::vector<Matrix>(static_cast<std::size_t>(horizon),
                               Matrix::Zero(plant.nu(), plant.nx()));
  }
}

bool is_equilibrium(const LinearModel& m, const CostSpec& cost) {
  const Vector r = m.A * cost.x_ref + m.B * cost.u_ref - cost.x_ref;
  return r.norm() <= 1e-12 * (1.0 + cost.x_ref.norm() + cost.u_ref.norm());
}

std::vector<ControlVector> jacobian_warm_start(const plants::PlantSpec& plant, const CostSpec& cost,
                                               const StateVector& x0, int horizon) {
  const LinearModel lin = plants::linearize(plant, cost.x_ref, cost.u_ref);
  const auto kind = cost.is_quadratic() ? control::ControllerKind::Lqr : control::ControllerKind::Mpc;
  const control::Policy policy = control::synthesize(lin, cost, horizon, kind);
  std::vector<ControlVector> controls;
  StateVector x = x0;
  for (int k = 0; k < horizon; ++k) {
    ControlVector u = control::policy_first_control(policy, x, k);
    x = plants::step(plant, x, u);
    if (!x.allFinite()) throw DivergenceError("diverged");
    controls.push_back(std::move(u));
  }
  return controls;
}

}  // namespace

double smoothed_cost(const Trajectory& traj, const CostSpec& cost, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("smoothing temperature must be positive");
  if (!cost.soft_bounds || cost.soft_bounds->is_vacuous()) return evaluate_cost(traj, cost);
  CostSpec quadratic = cost;
  quadratic.soft_bounds.reset();
  double j = evaluate_cost(traj, quadratic);
  const SoftBounds& sb = *cost.soft_bounds;
  for (const auto& x : traj.states) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double lo = sb.lower[i];
      const double hi = sb.upper[i];
      if (!std::isfinite(lo) && !std::isfinite(hi)) continue;
      j += sb.weight * smooth_piece(std::isfinite(lo) ? lo - x[i] : -kInf,
                                    std::isfinite(hi) ? x[i] - hi : -kInf, tau);
    }
  }
  return j;
}

OracleResult oracle_linear(const plants::PlantSpec& plant, const CostSpec& cost,
                           const StateVector& x0, int horizon) {
  check_inputs(plant, cost, x0, horizon);
  if (!plant.is_linear()) throw std::invalid_argument("oracle_linear requires a linear plant");
  if (!cost.is_quadratic()) {
    throw std::invalid_argument("oracle_linear requires a quadratic cost; use oracle_nonlinear");
  }
  const LinearModel model = plants::true_model(plant);
  if (!is_equilibrium(model, cost)) return oracle_linear_qp(plant, cost, x0, horizon);

  const control::LqrPolicy lqr = control::lqr_backward(model, cost, horizon);
  OracleResult res;
  res.method = "riccati";
  StateVector x = x0;
  for (int k = 0; k < horizon; ++k) {
    ControlVector u = lqr.control(x, k);
    x = model.A * x + model.B * u;
    res.controls.push_back(std::move(u));
  }
  const Vector dx = x0 - cost.x_ref;
  res.cost = dx.dot(lqr.value_mats.front() * dx);
  res.certified = true;
  res.starts_converged = 1;
  return res;
}

OracleResult oracle_linear_qp(const plants::PlantSpec& plant, const CostSpec& cost,
                              const StateVector& x0, int horizon) {
  check_inputs(plant, cost, x0, horizon);
  if (!plant.is_linear()) throw std::invalid_argument("oracle_linear_qp requires a linear plant");
  OracleResult res;
  res.method = "qp";
  if (horizon == 0) {
    res.cost = evaluate_cost(plants::rollout(plant, x0, {}), cost);
    res.certified = true;
    res.starts_converged = 1;
    return res;
  }
  const control::MpcSolution sol =
      control::mpc_solve(plants::true_model(plant), cost, x0, 0, horizon);
  res.controls = sol.controls;
  res.cost = evaluate_cost(plants::rollout(plant, x0, res.controls), cost);
  res.gradient_norm = sol.kkt_residual;
  res.certified = true;
  res.starts_converged = 1;
  return res;
}

OracleResult oracle_nonlinear(const plants::PlantSpec& plant, const CostSpec& cost,
                              const StateVector& x0, int horizon, const OracleOptions& opts) {
  check_inputs(plant, cost, x0, horizon);
  if (opts.seeds < 1) throw std::invalid_argument("oracle needs at least one start");
  const Eigen::Index nu = plant.nu();
  const Eigen::Index dim = nu * horizon;

  OracleResult best;
  best.method = "multistart";
  best.cost = kInf;
  if (dim == 0) {
    best.cost = evaluate_cost(plants::rollout(plant, x0, {}), cost);
    best.certified = true;
    best.starts_converged = 1;
    return best;
  }

  std::vector<Vector> starts;
  starts.push_back(Vector::Zero(dim));
  if (opts.seeds > 1) {
    try {
      starts.push_back(flatten(jacobian_warm_start(plant, cost, x0, horizon), nu));
    } catch (const std::exception&) {
      starts.push_back(Vector::Zero(dim));
    }
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-opts.random_scale, opts.random_scale);
  while (static_cast<int>(starts.size()) < opts.seeds) {
    Vector s(dim);
    for (Eigen::Index i = 0; i < dim; ++i) s[i] = unif(rng);
    starts.push_back(std::move(s));
  }

  const bool smooth = cost.soft_bounds && !cost.soft_bounds->is_vacuous();
  std::vector<double> schedule = smooth ? opts.smoothing : std::vector<double>{0.0};
  if (schedule.empty()) throw std::invalid_argument("smoothing schedule is empty");

  optim::BfgsOptions bfgs;
  bfgs.max_iterations = opts.max_iterations;
  bfgs.gradient_tolerance = 0.01 * opts.gradient_tolerance / std::sqrt(static_cast<double>(dim));
  bfgs.function_tolerance = 1e-15;

  const Shooting shooting{plant, cost, x0, stabilizing_gains(plant, cost, horizon)};
  double best_grad = kInf;
  for (const Vector& start : starts) {
    Vector w;
    try {
      w = shooting.to_w(start);
    } catch (const NumericalError&) {
      continue;
    }
    double tau = schedule.back();
    for (const double t : schedule) {
      tau = t;
      auto value = [&](const Vector& v) { return shooting.value(v, t); };
      const optim::DifferentiableFunction f = [&](const Vector& v, Vector* g) {
        const double j = value(v);
        if (g) *g = optim::central_difference_gradient(value, v);
        return j;
      };
      for (int round = 0; round < 3; ++round) {
        const optim::BfgsResult r = optim::minimize_bfgs(f, w, std::nullopt, bfgs);
        if (!std::isfinite(r.value)) break;
        w = r.x;
        if (r.converged || r.iterations == 0) break;
      }
    }
    Vector u;
    try {
      u = shooting.to_u(w);
    } catch (const NumericalError&) {
      continue;
    }
    const double j = rollout_cost(plant, cost, x0, u, 0.0);
    if (!std::isfinite(j)) continue;
    // certificate in the stabilized coordinates
    const double grad_norm = optim::central_difference_gradient(
                                 [&](const Vector& v) { return shooting.value(v, tau); }, w)
                                 .norm();
    const bool ok = grad_norm <= opts.gradient_tolerance;
    if (ok) ++best.starts_converged;
    if (ok && (!best.certified || j < best.cost)) {
      best.cost = j;
      best.controls = split(u, nu);
      best.gradient_norm = grad_norm;
      best.certified = true;
    } else if (!best.certified && j < best.cost) {
      best.cost = j;
      best.controls = split(u, nu);
      best_grad = grad_norm;
    }
  }
  if (!best.certified) {
    std::ostringstream msg;
    msg << "oracle: no start converged (best cost " << best.cost << ", gradient norm " << best_grad
        << ")";
    throw NumericalError(msg.str());
  }
  return best;
}

OracleResult compute_oracle(const plants::PlantSpec& plant, const CostSpec& cost,
                            const StateVector& x0, int horizon, const OracleOptions& opts) {
  if (plant.is_linear()) {
    return cost.is_quadratic() ? oracle_linear(plant, cost, x0, horizon)
                               : oracle_linear_qp(plant, cost, x0, horizon);
  }
  return oracle_nonlinear(plant, cost, x0, horizon, opts);
}

}  // namespace adobo::oracle
