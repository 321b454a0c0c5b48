#include "adobo/baselines.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "adobo/control.hpp"
#include "adobo/error.hpp"

namespace adobo::baselines {

LinearModel reference_linearization(const ExperimentConfig& config) {
  return plants::linearize(config.plant, config.cost.x_ref, config.cost.u_ref);
}

LinearModel noisy_model(const LinearModel& model, double alpha, std::uint64_t noise_seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix ar(model.nx(), model.nx());
  Matrix br(model.nx(), model.nu());
  for (Eigen::Index i = 0; i < ar.size(); ++i) ar.data()[i] = unif(rng);
  for (Eigen::Index i = 0; i < br.size(); ++i) br.data()[i] = unif(rng);
  return {(1.0 - alpha) * model.A + alpha * ar, (1.0 - alpha) * model.B + alpha * br};
}

Objective make_qr_objective(const ExperimentConfig& config, const LinearModel& model) {
  if (!config.cost.is_quadratic()) throw std::invalid_argument("(Q,R) tuning requires a quadratic cost");
  const Eigen::Index nx = config.plant.nx();
  const Eigen::Index nu = config.plant.nu();
  if (model.nx() != nx || model.nu() != nu) throw DimensionError("linearization has wrong shape");

  Objective obj;
  obj.method = method_name(Method::QrTuning);
  obj.bounds = Box::uniform(nx + nu, config.baseline.log10_weight_lo, config.baseline.log10_weight_hi);
  Vector init(nx + nu);
  init << config.cost.Q.diagonal(), config.cost.R.diagonal();
  init = init.unaryExpr([](double w) { return std::log10(std::max(w, 1e-300)); });
  obj.initial_points = {obj.bounds.clamp(init)};
  obj.evaluate = [config, model, nx, nu](const Vector& theta) {
    const Vector w = theta.unaryExpr([](double t) { return std::pow(10.0, t); });
    CostSpec tuned = config.cost;
    tuned.Q = w.head(nx).asDiagonal();
    tuned.R = w.tail(nu).asDiagonal();
    std::optional<control::LqrPolicy> lqr;
    std::string failure;
    try {
      lqr = control::lqr_backward(model, tuned, config.horizon);
    } catch (const NumericalError& e) {
      failure = e.what();
    }
    return run_closed_loop(config, [&](const StateVector& x, int k) -> ControlVector {
      if (!lqr) throw NumericalError(failure);
      return lqr->control(x, k);
    });
  };
  return obj;
}

Objective make_k_objective(const ExperimentConfig& config) {
  const Eigen::Index nx = config.plant.nx();
  const Eigen::Index nu = config.plant.nu();
  Objective obj;
  obj.method = method_name(Method::KLearning);
  obj.bounds = Box::uniform(nx * nu, -config.baseline.gain_bound, config.baseline.gain_bound);
  obj.evaluate = [config, nx, nu](const Vector& theta) {
    const Matrix k = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        theta.data(), nu, nx);
    return run_closed_loop(config, [&](const StateVector& x, int) -> ControlVector {
      return config.cost.u_ref + k * (x - config.cost.x_ref);
    });
  };
  return obj;
}

Objective make_useq_objective(const ExperimentConfig& config) {
  const Eigen::Index nu = config.plant.nu();
  Objective obj;
  obj.method = method_name(Method::ControlSequence);
  obj.bounds = Box::uniform(nu * config.horizon, -config.baseline.control_bound,
                            config.baseline.control_bound);
  obj.evaluate = [config, nu](const Vector& theta) {
    return run_closed_loop(config, [&](const StateVector&, int k) -> ControlVector {
      return theta.segment(k * nu, nu);
    });
  };
  return obj;
}

std::vector<RunRecord> run_qr_tuning(const ExperimentConfig& config, const LinearModel& linearization,
                                     double alpha) {
  config.validate();
  const LinearModel model = noisy_model(linearization, alpha, config.baseline.noise_seed);
  return run_bayes_opt(make_qr_objective(config, model), config, resolve_oracle(config));
}

std::vector<RunRecord> run_k_learning(const ExperimentConfig& config) {
  config.validate();
  return run_bayes_opt(make_k_objective(config), config, resolve_oracle(config));
}

std::vector<RunRecord> run_control_sequence_learning(const ExperimentConfig& config) {
  config.validate();
  return run_bayes_opt(make_useq_objective(config), config, resolve_oracle(config));
}

LeastSquaresFit least_squares_fit(const std::vector<Trajectory>& data, Eigen::Index nx,
                                  Eigen::Index nu) {
  Eigen::Index rows = 0;
  for (const auto& t : data) rows += static_cast<Eigen::Index>(t.controls.size());
  if (rows == 0) throw std::invalid_argument("least squares needs at least one transition");
  Matrix z(rows, nx + nu);
  Matrix y(rows, nx);
  Eigen::Index r = 0;
  for (const auto& t : data) {
    for (std::size_t k = 0; k < t.controls.size(); ++k, ++r) {
      if (t.states[k].size() != nx || t.controls[k].size() != nu) {
        throw DimensionError("trajectory does not match (nx, nu)");
      }
      z.row(r) << t.states[k].transpose(), t.controls[k].transpose();
      y.row(r) = t.states[k + 1].transpose();
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(z);
  const Matrix theta = cod.solve(y);  // (nx+nu) x nx, minimum norm
  LeastSquaresFit fit;
  fit.model.A = theta.topRows(nx).transpose();
  fit.model.B = theta.bottomRows(nu).transpose();
  fit.rank_deficient = cod.rank() < nx + nu;
  fit.residual = (z * theta - y).norm();
  return fit;
}

std::vector<RunRecord> run_ls_identification(const ExperimentConfig& config) {
  config.validate();
  const double j_star = resolve_oracle(config);
  const Eigen::Index nx = config.plant.nx();
  const Eigen::Index nu = config.plant.nu();

  Vector theta;
  if (!config.initial_thetas.empty()) {
    theta = config.bounds.clamp(config.initial_thetas.front());
  } else {
    auto rng = make_rng(config.seed, Stream::Initial);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector z(config.bounds.dim());
    for (Eigen::Index d = 0; d < z.size(); ++d) z[d] = unit(rng);
    theta = config.bounds.from_unit(z);
  }

  std::vector<Trajectory> data;
  std::vector<RunRecord> records;
  double best = std::numeric_limits<double>::infinity();
  bool rank_deficient = false;
  for (int it = 1; it <= config.budget; ++it) {
    const Evaluation ev = closed_loop_evaluate(theta, config);
    RunRecord rec;
    rec.iteration = it;
    rec.theta = theta;
    rec.cost = ev.cost;
    rec.warped_cost = config.warp ? gp::warp(ev.cost) : ev.cost;
    best = std::min(best, ev.cost);
    rec.best_cost = best;
    rec.eta = j_star > 0.0 ? eta(best, j_star) : std::numeric_limits<double>::quiet_NaN();
    rec.penalized = ev.penalized;
    rec.rank_deficient = rank_deficient;
    records.push_back(rec);

    if (!ev.trajectory.controls.empty()) data.push_back(ev.trajectory);
    if (data.empty()) continue;
    const LeastSquaresFit fit = least_squares_fit(data, nx, nu);
    rank_deficient = fit.rank_deficient;
    if (fit.model.is_finite()) theta = pack_model(fit.model).values;
  }
  return records;
}

std::vector<RunRecord> run_method(const ExperimentConfig& config) {
  switch (config.method) {
    case Method::Adobo: {
      if (!config.seed_with_linearization) return run_adobo(config);
      ExperimentConfig seeded = config;
      seeded.initial_thetas = {pack_model(noisy_model(reference_linearization(config),
                                                      config.baseline.alpha,
                                                      config.baseline.noise_seed))
                                   .values};
      return run_adobo(seeded);
    }
    case Method::QrTuning:
      return run_qr_tuning(config, reference_linearization(config), config.baseline.alpha);
    case Method::KLearning: return run_k_learning(config);
    case Method::LeastSquares: return run_ls_identification(config);
    case Method::ControlSequence: return run_control_sequence_learning(config);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace adobo::baselines
