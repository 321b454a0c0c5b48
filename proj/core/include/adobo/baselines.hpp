#pragma once

#include <vector>

#include "adobo/experiment.hpp"

namespace adobo::baselines {

/// Jacobian of the true plant at the cost reference (x*, u*).
LinearModel reference_linearization(const ExperimentConfig& config);

/// (1 - alpha) M + alpha M_r with M_r entries drawn i.i.d. from U[-1, 1]
/// using `noise_seed`.
LinearModel noisy_model(const LinearModel& model, double alpha, std::uint64_t noise_seed);

/// theta = log10 of the diagonal of (W_Q, W_R); the controller is LQR on
/// `model` with those penalties and the task's terminal weight.
Objective make_qr_objective(const ExperimentConfig& config, const LinearModel& model);
/// theta = row-major K, u = u* + K (x - x*).
Objective make_k_objective(const ExperimentConfig& config);
/// theta = u_0 .. u_{N-1} applied open loop.
Objective make_useq_objective(const ExperimentConfig& config);

std::vector<RunRecord> run_qr_tuning(const ExperimentConfig& config, const LinearModel& linearization,
                                     double alpha);
std::vector<RunRecord> run_k_learning(const ExperimentConfig& config);
std::vector<RunRecord> run_control_sequence_learning(const ExperimentConfig& config);

struct LeastSquaresFit {
  LinearModel model;
  bool rank_deficient = false;
  double residual = 0.0;  // Frobenius norm of the fit residual
};

/// Ordinary least squares for x_{k+1} = A x_k + B u_k over every transition
/// of every trajectory; minimum-norm solution when the regressor is rank
/// deficient.
LeastSquaresFit least_squares_fit(const std::vector<Trajectory>& data, Eigen::Index nx,
                                  Eigen::Index nu);

/// Iterative identification: the first model is drawn from the search box,
/// every later one is refit on all transitions observed so far.
std::vector<RunRecord> run_ls_identification(const ExperimentConfig& config);

/// Dispatches on config.method.
std::vector<RunRecord> run_method(const ExperimentConfig& config);

}  // namespace adobo::baselines
