#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "adobo/types.hpp"

namespace adobo::gp {

/// Matern 5/2 hyperparameters. A single lengthscale means an isotropic
/// kernel; one per input dimension means ARD.
struct KernelParams {
  double signal_std = 1.0;
  Vector lengthscales = Vector::Ones(1);
  double noise_std = 0.0;

  bool is_ard() const { return lengthscales.size() > 1; }
  void validate() const;

  /// [log sf, log l_1..l_m, log sn]
  Vector to_log() const;
  static KernelParams from_log(const Vector& log_params);
};

/// sf^2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r), r = |(a - b) / l|.
double kernel_eval(const KernelParams& p, const Vector& a, const Vector& b);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Zero-mean GP regression snapshot. The factorization of
/// K + (sn^2 + jitter) I is computed on construction; jitter escalates
/// 1e-10 -> 1e-6 until the Cholesky succeeds.
class GpModel {
 public:
  /// inputs holds one observation per column.
  GpModel(KernelParams kernel, Matrix inputs, Vector targets);
  static GpModel from_points(KernelParams kernel, const std::vector<Vector>& inputs,
                             const std::vector<double>& targets);

  /// Snapshot with one more observation, reusing the factorization when the
  /// appended row keeps it positive definite.
  GpModel with_observation(const Vector& x, double y) const;
  GpModel with_kernel(const KernelParams& kernel) const;
  /// Same inputs and factorization, new targets.
  GpModel with_targets(const Vector& targets) const;

  Prediction posterior(const Vector& query) const;
  /// Posterior for every column of queries.
  void posterior_batch(const Matrix& queries, Vector& mean, Vector& variance) const;

  double log_marginal_likelihood() const;
  /// Gradient of the log marginal likelihood with respect to to_log() of
  /// the kernel parameters.
  Vector log_marginal_likelihood_gradient() const;

  const KernelParams& kernel() const { return kernel_; }
  const Matrix& inputs() const { return inputs_; }
  const Vector& targets() const { return targets_; }
  Eigen::Index size() const { return targets_.size(); }
  Eigen::Index dim() const { return inputs_.rows(); }
  double jitter() const { return jitter_; }
  const Matrix& cholesky() const { return chol_; }
  const Vector& alpha() const { return alpha_; }

 private:
  GpModel() = default;
  Matrix scaled(const Matrix& x) const;
  void factorize();

  KernelParams kernel_;
  Matrix inputs_;
  Matrix scaled_inputs_;
  Vector targets_;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

Prediction posterior(const GpModel& gp, const Vector& query);
double log_marginal_likelihood(const GpModel& gp);

/// Search ranges for the hyperparameters, in natural-log space.
struct FitOptions {
  int restarts = 3;
  double log_signal_lo = std::log(1e-2);
  double log_signal_hi = std::log(1e1);
  double log_length_lo = std::log(1e-2);
  double log_length_hi = std::log(1e1);
  double log_noise_lo = std::log(1e-6);
  double log_noise_hi = std::log(1.0);
  int max_iterations = 100;
};

struct FitResult {
  KernelParams params;
  double log_likelihood = 0.0;
  bool ok = true;
  std::string warning;
};

/// Multistart maximization of the log marginal likelihood. The first start is
/// the current kernel (clamped into the search box); the rest are uniform in
/// the box. Keeps the current kernel and sets a warning when every start fails.
FitResult fit_hyperparams(const GpModel& gp, const FitOptions& opts, std::mt19937_64& rng);

/// Log warping of positive costs; inputs are floored at 1e-12.
double warp(double cost);
double unwarp(double y);

}  // namespace adobo::gp
