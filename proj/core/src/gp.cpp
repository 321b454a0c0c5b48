#include "adobo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "adobo/error.hpp"
#include "adobo/optimize.hpp"

namespace adobo::gp {
namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kJitterLadder[] = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

double matern52(double sf2, double r) {
  const double a = kSqrt5 * r;
  return sf2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

// d k / d log(l) for the isotropic kernel, expressed through r.
double matern52_dlogl(double sf2, double r) {
  const double a = kSqrt5 * r;
  return sf2 * (5.0 / 3.0) * (1.0 + a) * std::exp(-a) * r * r;
}

bool try_cholesky(const Matrix& k, double diag, Matrix& out) {
  Matrix reg = k;
  reg.diagonal().array() += diag;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  return out.diagonal().allFinite() && (out.diagonal().array() > 0.0).all();
}

}  // namespace

void KernelParams::validate() const {
  if (!(signal_std > 0.0) || !std::isfinite(signal_std)) {
    throw std::invalid_argument("signal_std must be positive");
  }
  if (lengthscales.size() == 0 || !(lengthscales.array() > 0.0).all() ||
      !lengthscales.allFinite()) {
    throw std::invalid_argument("lengthscales must be positive");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw std::invalid_argument("noise_std must be nonnegative");
  }
}

Vector KernelParams::to_log() const {
  Vector v(lengthscales.size() + 2);
  v[0] = std::log(signal_std);
  v.segment(1, lengthscales.size()) = lengthscales.array().log().matrix();
  v[v.size() - 1] = std::log(noise_std);
  return v;
}

KernelParams KernelParams::from_log(const Vector& log_params) {
  if (log_params.size() < 3) throw DimensionError("log kernel parameter vector too short");
  KernelParams p;
  p.signal_std = std::exp(log_params[0]);
  p.lengthscales = log_params.segment(1, log_params.size() - 2).array().exp().matrix();
  p.noise_std = std::exp(log_params[log_params.size() - 1]);
  return p;
}

double kernel_eval(const KernelParams& p, const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("kernel inputs have different dimensions");
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double l = p.is_ard() ? p.lengthscales[i] : p.lengthscales[0];
    const double d = (a[i] - b[i]) / l;
    r2 += d * d;
  }
  return matern52(p.signal_std * p.signal_std, std::sqrt(r2));
}

GpModel::GpModel(KernelParams kernel, Matrix inputs, Vector targets)
    : kernel_(std::move(kernel)), inputs_(std::move(inputs)), targets_(std::move(targets)) {
  kernel_.validate();
  if (inputs_.cols() != targets_.size()) {
    throw DimensionError("number of inputs and targets differ");
  }
  if (targets_.size() == 0) throw std::invalid_argument("GP needs at least one observation");
  if (kernel_.is_ard() && kernel_.lengthscales.size() != inputs_.rows()) {
    throw DimensionError("ARD lengthscales do not match input dimension");
  }
  if (!inputs_.allFinite() || !targets_.allFinite()) {
    throw std::invalid_argument("GP data must be finite");
  }
  scaled_inputs_ = scaled(inputs_);
  factorize();
}

GpModel GpModel::from_points(KernelParams kernel, const std::vector<Vector>& inputs,
                             const std::vector<double>& targets) {
  if (inputs.empty()) throw std::invalid_argument("GP needs at least one observation");
  Matrix x(inputs.front().size(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != x.rows()) throw DimensionError("GP inputs have different dimensions");
    x.col(static_cast<Eigen::Index>(i)) = inputs[i];
  }
  Vector y = Eigen::Map<const Vector>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  return GpModel(std::move(kernel), std::move(x), std::move(y));
}

Matrix GpModel::scaled(const Matrix& x) const {
  if (kernel_.is_ard()) return x.array().colwise() / kernel_.lengthscales.array();
  return x / kernel_.lengthscales[0];
}

void GpModel::factorize() {
  const Eigen::Index n = size();
  const double sf2 = kernel_.signal_std * kernel_.signal_std;
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r = (scaled_inputs_.col(i) - scaled_inputs_.col(j)).norm();
      k(i, j) = k(j, i) = matern52(sf2, r);
    }
  }
  const double noise = kernel_.noise_std * kernel_.noise_std;
  for (double jitter : kJitterLadder) {
    if (try_cholesky(k, noise + jitter, chol_)) {
      jitter_ = jitter;
      alpha_ = chol_.triangularView<Eigen::Lower>().solve(targets_);
      chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
      return;
    }
  }
  throw NumericalError("kernel matrix not PD");
}

GpModel GpModel::with_observation(const Vector& x, double y) const {
  if (x.size() != dim()) throw DimensionError("observation has wrong dimension");
  if (!x.allFinite() || !std::isfinite(y)) throw std::invalid_argument("GP data must be finite");
  GpModel next;
  next.kernel_ = kernel_;
  const Eigen::Index n = size();
  next.inputs_.resize(dim(), n + 1);
  next.inputs_.leftCols(n) = inputs_;
  next.inputs_.col(n) = x;
  next.scaled_inputs_.resize(dim(), n + 1);
  next.scaled_inputs_.leftCols(n) = scaled_inputs_;
  next.scaled_inputs_.col(n) = scaled(x);
  next.targets_.resize(n + 1);
  next.targets_.head(n) = targets_;
  next.targets_[n] = y;

  const double sf2 = kernel_.signal_std * kernel_.signal_std;
  Vector kx(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kx[i] = matern52(sf2, (scaled_inputs_.col(i) - next.scaled_inputs_.col(n)).norm());
  }
  const Vector l = chol_.triangularView<Eigen::Lower>().solve(kx);
  const double d2 = sf2 + kernel_.noise_std * kernel_.noise_std + jitter_ - l.squaredNorm();
  if (d2 > 1e-14 * sf2 && std::isfinite(d2)) {
    next.jitter_ = jitter_;
    next.chol_ = Matrix::Zero(n + 1, n + 1);
    next.chol_.topLeftCorner(n, n) = chol_;
    next.chol_.block(n, 0, 1, n) = l.transpose();
    next.chol_(n, n) = std::sqrt(d2);
    next.alpha_ = next.chol_.triangularView<Eigen::Lower>().solve(next.targets_);
    next.chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(next.alpha_);
  } else {
    next.factorize();
  }
  return next;
}

GpModel GpModel::with_kernel(const KernelParams& kernel) const {
  return GpModel(kernel, inputs_, targets_);
}

GpModel GpModel::with_targets(const Vector& targets) const {
  if (targets.size() != size()) throw DimensionError("number of inputs and targets differ");
  if (!targets.allFinite()) throw std::invalid_argument("GP data must be finite");
  GpModel next = *this;
  next.targets_ = targets;
  next.alpha_ = chol_.triangularView<Eigen::Lower>().solve(targets);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(next.alpha_);
  return next;
}

Prediction GpModel::posterior(const Vector& query) const {
  if (query.size() != dim()) throw DimensionError("query has wrong dimension");
  Vector mean, var;
  posterior_batch(query, mean, var);
  return {mean[0], var[0]};
}

void GpModel::posterior_batch(const Matrix& queries, Vector& mean, Vector& variance) const {
  if (queries.rows() != dim()) throw DimensionError("query has wrong dimension");
  const Eigen::Index n = size();
  const Eigen::Index m = queries.cols();
  const double sf2 = kernel_.signal_std * kernel_.signal_std;
  const Matrix q = scaled(queries);
  Matrix kq(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Vector r = (scaled_inputs_.colwise() - q.col(j)).colwise().norm().transpose();
    for (Eigen::Index i = 0; i < n; ++i) kq(i, j) = matern52(sf2, r[i]);
  }
  mean = kq.transpose() * alpha_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(kq);
  variance = (sf2 - kq.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
}

double GpModel::log_marginal_likelihood() const {
  const double n = static_cast<double>(size());
  return -0.5 * targets_.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Vector GpModel::log_marginal_likelihood_gradient() const {
  const Eigen::Index n = size();
  const double sf2 = kernel_.signal_std * kernel_.signal_std;
  Matrix kinv = Matrix::Identity(n, n);
  chol_.triangularView<Eigen::Lower>().solveInPlace(kinv);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(kinv);
  const Matrix w = alpha_ * alpha_.transpose() - kinv;

  const Eigen::Index nl = kernel_.lengthscales.size();
  Vector grad = Vector::Zero(nl + 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    grad[0] += 0.5 * w(j, j) * 2.0 * sf2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const auto diff = scaled_inputs_.col(i) - scaled_inputs_.col(j);
      const double r = diff.norm();
      const double kij = matern52(sf2, r);
      // symmetric pair counted once, weighted by 2
      grad[0] += w(i, j) * 2.0 * kij;
      if (kernel_.is_ard()) {
        const double a = kSqrt5 * r;
        const double common = sf2 * (5.0 / 3.0) * (1.0 + a) * std::exp(-a);
        for (Eigen::Index d = 0; d < nl; ++d) {
          grad[1 + d] += w(i, j) * common * diff[d] * diff[d];
        }
      } else {
        grad[1] += w(i, j) * matern52_dlogl(sf2, r);
      }
    }
  }
  grad[nl + 1] = kernel_.noise_std * kernel_.noise_std * w.trace();
  return grad;
}

Prediction posterior(const GpModel& gp, const Vector& query) { return gp.posterior(query); }

double log_marginal_likelihood(const GpModel& gp) { return gp.log_marginal_likelihood(); }

FitResult fit_hyperparams(const GpModel& gp, const FitOptions& opts, std::mt19937_64& rng) {
  if (gp.size() < 2) throw std::invalid_argument("hyperparameter fitting needs >= 2 observations");
  if (opts.restarts < 1) throw std::invalid_argument("restarts must be >= 1");

  const Eigen::Index nl = gp.kernel().lengthscales.size();
  Vector lo(nl + 2), hi(nl + 2);
  lo[0] = opts.log_signal_lo;
  hi[0] = opts.log_signal_hi;
  lo.segment(1, nl).setConstant(opts.log_length_lo);
  hi.segment(1, nl).setConstant(opts.log_length_hi);
  lo[nl + 1] = opts.log_noise_lo;
  hi[nl + 1] = opts.log_noise_hi;
  const Box box(lo, hi);

  auto objective = [&gp](const Vector& z, Vector* grad) -> double {
    try {
      const GpModel trial = gp.with_kernel(KernelParams::from_log(z));
      if (grad) *grad = -trial.log_marginal_likelihood_gradient();
      return -trial.log_marginal_likelihood();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  optim::BfgsOptions bopts;
  bopts.max_iterations = opts.max_iterations;
  bopts.gradient_tolerance = 1e-5;
  bopts.function_tolerance = 1e-10;

  FitResult best;
  best.params = gp.kernel();
  best.ok = false;
  double best_value = std::numeric_limits<double>::infinity();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector start = gp.kernel().to_log();
  for (Eigen::Index i = 0; i < start.size(); ++i) {
    if (!std::isfinite(start[i])) start[i] = lo[i];
  }
  start = box.clamp(start);
  for (int r = 0; r < opts.restarts; ++r) {
    if (r > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    }
    const optim::BfgsResult res = optim::minimize_bfgs(objective, start, box, bopts);
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best.params = KernelParams::from_log(res.x);
      best.ok = true;
    }
  }
  if (!best.ok) {
    best.params = gp.kernel();
    best.warning = "hyperparameter fit failed for every start; keeping previous parameters";
    best.log_likelihood = gp.log_marginal_likelihood();
  } else {
    best.log_likelihood = -best_value;
  }
  return best;
}

double warp(double cost) { return std::log(std::max(cost, 1e-12)); }

double unwarp(double y) { return std::exp(y); }

}  // namespace adobo::gp
