#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "adobo/bo.hpp"
#include "adobo/control.hpp"
#include "adobo/cost.hpp"
#include "adobo/gp.hpp"
#include "adobo/plants.hpp"
#include "adobo/types.hpp"

namespace adobo {

enum class Method { Adobo, QrTuning, KLearning, LeastSquares, ControlSequence };

/// "adobo" | "qr" | "klearn" | "ls" | "useq"
std::string method_name(Method m);
Method method_from_name(std::string_view name);

struct GpSettings {
  gp::FitOptions fit;
  /// Refit hyperparameters at every iteration while the data set has at
  /// most this many points, then every `refit_every` iterations with a
  /// single restart from the previous optimum.
  int refit_all_until = 100;
  int refit_every = 5;
  bool ard = false;
  double initial_signal_std = 1.0;
  double initial_lengthscale = 0.5;
  double initial_noise_std = 1e-3;
};

struct BaselineSettings {
  /// Weight of the random perturbation in (1-alpha) A* + alpha A_r.
  double alpha = 0.0;
  /// Seed of the uniform [-1,1] perturbation matrices A_r, B_r.
  std::uint64_t noise_seed = 1234;
  /// log10 box of the diagonal penalty entries tuned by the (Q,R) baseline.
  double log10_weight_lo = -2.0;
  double log10_weight_hi = 2.0;
  /// Box of the feedback-gain entries for K-learning.
  double gain_bound = 2.0;
  /// Box of the open-loop controls for control-sequence learning.
  double control_bound = 2.0;
};

struct ExperimentConfig {
  plants::PlantSpec plant;
  CostSpec cost;
  StateVector x0;
  int horizon = 30;
  Box bounds;  // search box of the packed (A, B) parameters
  Method method = Method::Adobo;
  control::ControllerKind controller = control::ControllerKind::Lqr;
  bo::AcquisitionConfig acquisition;
  GpSettings gp;
  BaselineSettings baseline;
  int budget = 100;
  std::uint64_t seed = 0;
  bool warp = true;
  std::optional<double> oracle_cost;
  /// Seed data for the surrogate. When empty, `initial_random` uniform draws
  /// from the search box are used.
  std::vector<Vector> initial_thetas;
  int initial_random = 1;
  /// aDOBO only: seed the surrogate with the packed noisy linearization
  /// (1-alpha) (A*, B*) + alpha (A_r, B_r) of the baseline settings.
  bool seed_with_linearization = false;
  double penalty_factor = 10.0;
  double divergence_norm = 1e6;

  void validate() const;
};

/// Setups of the benchmark tasks: Dubins car, 1D and 2D linear systems and
/// cart-pole, with their costs, initial states and parameter boxes.
ExperimentConfig default_config(plants::PlantKind kind);

/// Independent RNG stream derived from the master seed.
enum class Stream : std::uint64_t {
  Initial = 1,
  Acquisition = 2,
  Hyperparameters = 3,
  Baseline = 4,
  Oracle = 5,
};
std::mt19937_64 make_rng(std::uint64_t seed, Stream stream);

struct RunRecord {
  int iteration = 0;  // 1-based evaluation count
  Vector theta;
  double cost = 0.0;         // raw J
  double warped_cost = 0.0;  // log J when warping, J otherwise
  double best_cost = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  bool penalized = false;
  bool rank_deficient = false;
};

struct Evaluation {
  Trajectory trajectory;
  double cost = 0.0;
  bool penalized = false;
  std::string failure;
};

/// State feedback applied to the true plant at step k.
using FeedbackLaw = std::function<ControlVector(const StateVector& x, int k)>;

/// Runs the law on the true plant for the configured horizon and scores the
/// trajectory. Divergence, non-finite controls and controller failures stop
/// the rollout and record max(penalty_cost, cost of the partial trajectory
/// up to the offending state) instead of throwing.
Evaluation run_closed_loop(const ExperimentConfig& config, const FeedbackLaw& law);

/// Cost of holding u = 0 on the true plant.
double zero_control_cost(const ExperimentConfig& config);
double penalty_cost(const ExperimentConfig& config);

/// Decodes theta into (A, B), synthesizes the shrinking-horizon controller
/// for that model and applies its first control at every step of the true
/// plant.
Evaluation closed_loop_evaluate(const Vector& theta, const ExperimentConfig& config);

/// 100 (J_best - J*) / J*.
double eta(double best_cost, double oracle_cost);

/// What the Bayesian-optimization harness needs from a method: the search box,
/// the seed points and the mapping from parameters to closed-loop cost.
struct Objective {
  std::string method;
  Box bounds;
  std::vector<Vector> initial_points;
  std::function<Evaluation(const Vector&)> evaluate;
};

/// Shared BO loop: seed evaluations, then EI queries until `budget`
/// evaluations have been made. Inputs are mapped to the unit cube and
/// targets (warped when enabled) are standardized before GP modeling.
std::vector<RunRecord> run_bayes_opt(const Objective& objective, const ExperimentConfig& config,
                                     double oracle_cost);

Objective make_adobo_objective(const ExperimentConfig& config);

/// Oracle value of the config, computed when not given.
double resolve_oracle(const ExperimentConfig& config);

std::vector<RunRecord> run_adobo(const ExperimentConfig& config);

}  // namespace adobo
