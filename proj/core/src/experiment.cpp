#include "adobo/experiment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adobo/error.hpp"
#include "adobo/oracle.hpp"

namespace adobo {

std::string method_name(Method m) {
  switch (m) {
    case Method::Adobo: return "adobo";
    case Method::QrTuning: return "qr";
    case Method::KLearning: return "klearn";
    case Method::LeastSquares: return "ls";
    case Method::ControlSequence: return "useq";
  }
  return "unknown";
}

Method method_from_name(std::string_view name) {
  if (name == "adobo") return Method::Adobo;
  if (name == "qr") return Method::QrTuning;
  if (name == "klearn") return Method::KLearning;
  if (name == "ls") return Method::LeastSquares;
  if (name == "useq") return Method::ControlSequence;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  plant.validate();
  cost.validate();
  if (cost.nx() != plant.nx() || cost.nu() != plant.nu()) {
    throw DimensionError("cost dimensions do not match plant " + plants::plant_name(plant.kind));
  }
  if (x0.size() != plant.nx() || !x0.allFinite()) {
    throw DimensionError("x0 must be a finite vector of the plant state dimension");
  }
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (bounds.dim() != packed_size(plant.nx(), plant.nu())) {
    throw DimensionError("theta bounds must have nx*(nx+nu) entries");
  }
  if (!bounds.lower.allFinite() || !bounds.upper.allFinite()) {
    throw std::invalid_argument("theta bounds must be finite");
  }
  if (controller == control::ControllerKind::Lqr && !cost.is_quadratic()) {
    throw std::invalid_argument("LQR controller requires a quadratic cost; use mpc");
  }
  acquisition.validate();
  if (gp.refit_every < 1 || gp.refit_all_until < 0) {
    throw std::invalid_argument("GP refit cadence must be positive");
  }
  if (initial_random < 1 && initial_thetas.empty()) {
    throw std::invalid_argument("at least one initial point is required");
  }
  for (const auto& t : initial_thetas) {
    if (t.size() != bounds.dim()) throw DimensionError("initial theta has wrong dimension");
  }
  if (!(penalty_factor > 0.0) || !(divergence_norm > 0.0)) {
    throw std::invalid_argument("penalty factor and divergence norm must be positive");
  }
  if (oracle_cost && !(*oracle_cost >= 0.0)) {
    throw std::invalid_argument("oracle cost must be nonnegative");
  }
}

ExperimentConfig default_config(plants::PlantKind kind) {
  ExperimentConfig c;
  c.plant = plants::make_plant(kind);
  c.horizon = 30;
  switch (kind) {
    case plants::PlantKind::Dubins:
      c.cost = CostSpec::identity(3, 2);
      c.x0 = Vector(3);
      c.x0 << 1.5, 1.0, std::numbers::pi / 2.0;
      c.bounds = Box::uniform(15, -2.0, 2.0);
      break;
    case plants::PlantKind::Linear1D:
      c.cost = CostSpec::identity(1, 1);
      c.x0 = Vector::Ones(1);
      c.bounds = Box::uniform(2, -3.0, 3.0);
      break;
    case plants::PlantKind::Linear2D: {
      c.cost = CostSpec::identity(2, 1);
      SoftBounds sb;
      sb.lower = Vector(2);
      sb.lower << 0.5, -0.4;
      sb.upper = Vector::Constant(2, std::numeric_limits<double>::infinity());
      sb.weight = 100.0;
      c.cost.soft_bounds = sb;
      c.x0 = Vector(2);
      c.x0 << 1.0, 0.0;
      c.bounds = Box::uniform(6, -2.0, 2.0);
      c.controller = control::ControllerKind::Mpc;
      break;
    }
    case plants::PlantKind::CartPole: {
      Vector q(4);
      q << 0.1, 1.0, 100.0, 1.0;
      c.cost = CostSpec::diagonal(q, Vector::Constant(1, 0.1), q);
      const double inf = std::numeric_limits<double>::infinity();
      SoftBounds sb;
      sb.lower = Vector(4);
      sb.lower << -2.0, -inf, -0.1, -inf;
      sb.upper = Vector(4);
      sb.upper << 2.0, inf, inf, inf;
      sb.weight = 100.0;
      c.cost.soft_bounds = sb;
      c.x0 = Vector(4);
      c.x0 << 0.0, 0.0, std::numbers::pi / 6.0, 0.0;
      c.bounds = Box::uniform(20, -4.0, 4.0);
      c.controller = control::ControllerKind::Mpc;
      break;
    }
  }
  return c;
}

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  // seed_seq mixes (seed, stream) so streams differ even for adjacent seeds
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return std::mt19937_64(seq);
}

double zero_control_cost(const ExperimentConfig& config) {
  const std::vector<ControlVector> zeros(static_cast<std::size_t>(config.horizon),
                                         Vector::Zero(config.plant.nu()));
  return evaluate_cost(plants::rollout(config.plant, config.x0, zeros), config.cost);
}

double penalty_cost(const ExperimentConfig& config) {
  return config.penalty_factor * zero_control_cost(config);
}

Evaluation run_closed_loop(const ExperimentConfig& config, const FeedbackLaw& law) {
  Evaluation ev;
  ev.trajectory.states.push_back(config.x0);
  auto fail = [&](std::string why, const Trajectory& reached) {
    ev.penalized = true;
    ev.failure = std::move(why);
    const double incurred = evaluate_cost(reached, config.cost);
    ev.cost = std::isfinite(incurred) ? std::max(penalty_cost(config), incurred)
                                      : std::numeric_limits<double>::max();
    return ev;
  };
  for (int k = 0; k < config.horizon; ++k) {
    const StateVector& x = ev.trajectory.states.back();
    ControlVector u;
    try {
      u = law(x, k);
    } catch (const std::exception& e) {
      return fail(std::string("controller failed: ") + e.what(), ev.trajectory);
    }
    if (u.size() != config.plant.nu() || !u.allFinite()) {
      return fail("non-finite control", ev.trajectory);
    }
    StateVector next;
    try {
      next = plants::step(config.plant, x, u);
    } catch (const NumericalError& e) {
      return fail(e.what(), ev.trajectory);
    }
    if (!next.allFinite()) return fail("diverged", ev.trajectory);
    if (next.norm() > config.divergence_norm) {
      Trajectory reached = ev.trajectory;
      reached.controls.push_back(std::move(u));
      reached.states.push_back(std::move(next));
      return fail("diverged", reached);
    }
    ev.trajectory.controls.push_back(std::move(u));
    ev.trajectory.states.push_back(std::move(next));
  }
  ev.cost = evaluate_cost(ev.trajectory, config.cost);
  if (!std::isfinite(ev.cost)) return fail("non-finite cost", ev.trajectory);
  return ev;
}

Evaluation closed_loop_evaluate(const Vector& theta, const ExperimentConfig& config) {
  const LinearModel model = unpack_model(theta, config.plant.nx(), config.plant.nu());
  control::Policy policy;
  try {
    policy = control::synthesize(model, config.cost, config.horizon, config.controller);
  } catch (const NumericalError& e) {
    return run_closed_loop(config, [&](const StateVector&, int) -> ControlVector {
      throw NumericalError(e.what());
    });
  }
  return run_closed_loop(config, [&policy](const StateVector& x, int k) {
    return control::policy_first_control(policy, x, k);
  });
}

double eta(double best_cost, double oracle_cost) {
  if (!(oracle_cost > 0.0)) throw std::domain_error("eta requires a positive oracle cost");
  return 100.0 * (best_cost - oracle_cost) / oracle_cost;
}

namespace {

bool refit_due(const GpSettings& s, Eigen::Index n) {
  if (n < 2) return false;
  if (n <= s.refit_all_until) return true;
  return (n - s.refit_all_until) % s.refit_every == 0;
}

}  // namespace

std::vector<RunRecord> run_bayes_opt(const Objective& objective, const ExperimentConfig& config,
                                     double oracle_cost) {
  if (config.budget < 1) throw std::invalid_argument("budget must be >= 1");
  auto rng_init = make_rng(config.seed, Stream::Initial);
  auto rng_acq = make_rng(config.seed, Stream::Acquisition);
  auto rng_hyp = make_rng(config.seed, Stream::Hyperparameters);

  const Box& box = objective.bounds;
  const Eigen::Index dim = box.dim();
  std::vector<RunRecord> records;
  std::vector<Vector> unit_inputs;
  std::vector<double> targets;
  double best = std::numeric_limits<double>::infinity();

  auto record = [&](const Vector& theta) {
    const Evaluation ev = objective.evaluate(theta);
    RunRecord r;
    r.iteration = static_cast<int>(records.size()) + 1;
    r.theta = theta;
    r.cost = ev.cost;
    r.warped_cost = config.warp ? gp::warp(ev.cost) : ev.cost;
    best = std::min(best, ev.cost);
    r.best_cost = best;
    r.eta = oracle_cost > 0.0 ? eta(best, oracle_cost) : std::numeric_limits<double>::quiet_NaN();
    r.penalized = ev.penalized;
    records.push_back(r);
    unit_inputs.push_back(box.to_unit(theta));
    targets.push_back(r.warped_cost);
  };

  if (dim == 0) {
    record(Vector());
    return records;
  }

  std::vector<Vector> seeds;
  for (const auto& t : objective.initial_points) seeds.push_back(box.clamp(t));
  if (seeds.empty()) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < config.initial_random; ++i) {
      Vector z(dim);
      for (Eigen::Index d = 0; d < dim; ++d) z[d] = unit(rng_init);
      seeds.push_back(box.from_unit(z));
    }
  }
  for (const auto& t : seeds) {
    if (static_cast<int>(records.size()) >= config.budget) break;
    record(t);
  }

  gp::KernelParams kernel;
  kernel.signal_std = config.gp.initial_signal_std;
  kernel.lengthscales = Vector::Constant(config.gp.ard ? dim : 1, config.gp.initial_lengthscale);
  kernel.noise_std = config.gp.initial_noise_std;
  std::optional<gp::GpModel> model;
  const Box unit_box = Box::uniform(dim, 0.0, 1.0);

  while (static_cast<int>(records.size()) < config.budget) {
    const auto n = static_cast<Eigen::Index>(targets.size());
    Vector y = Eigen::Map<const Vector>(targets.data(), n);
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    y = (y.array() - mean) / (sd > 0.0 ? sd : 1.0);

    if (refit_due(config.gp, n) || !model) {
      const gp::GpModel current = gp::GpModel::from_points(kernel, unit_inputs, std::vector<double>(y.data(), y.data() + n));
      if (refit_due(config.gp, n)) {
        gp::FitOptions fit = config.gp.fit;
        if (n > config.gp.refit_all_until) fit.restarts = 1;
        kernel = gp::fit_hyperparams(current, fit, rng_hyp).params;
        model = current.with_kernel(kernel);
      } else {
        model = current;
      }
    } else {
      for (Eigen::Index i = model->size(); i < n; ++i) {
        model = model->with_observation(unit_inputs[static_cast<std::size_t>(i)], 0.0);
      }
      model = model->with_targets(y);
    }

    const Vector q = bo::next_query(*model, unit_box, config.acquisition, rng_acq);
    record(box.clamp(box.from_unit(q)));
  }
  return records;
}

Objective make_adobo_objective(const ExperimentConfig& config) {
  Objective obj;
  obj.method = method_name(Method::Adobo);
  obj.bounds = config.bounds;
  obj.initial_points = config.initial_thetas;
  obj.evaluate = [config](const Vector& theta) { return closed_loop_evaluate(theta, config); };
  return obj;
}

double resolve_oracle(const ExperimentConfig& config) {
  if (config.oracle_cost) return *config.oracle_cost;
  oracle::OracleOptions opts;
  opts.seed = 0;
  return oracle::compute_oracle(config.plant, config.cost, config.x0, config.horizon, opts).cost;
}

std::vector<RunRecord> run_adobo(const ExperimentConfig& config) {
  config.validate();
  const double j_star = resolve_oracle(config);
  return run_bayes_opt(make_adobo_objective(config), config, j_star);
}

}  // namespace adobo
