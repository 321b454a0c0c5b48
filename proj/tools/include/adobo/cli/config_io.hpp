#pragma once

#include <stdexcept>
#include <string>

#include "adobo/experiment.hpp"

namespace adobo::cli {

/// Invalid configuration; the message names the file, line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses an INI experiment description. Sections and keys:
///
///   [experiment] plant, method, controller, horizon, budget, seed, warp,
///                oracle_cost, initial_random, penalty_factor
///   [cost]       q, r, qf, x_ref, u_ref, lower, upper, weight
///   [initial]    x0, linearization (on: seed aDOBO with the noisy linearization)
///   [bounds]     lower, upper     (one value broadcasts)
///   [bo]         n_random, n_local, local_scale, n_refine, refine_iters, xi,
///                restarts, ard, refit_all_until, refit_every
///   [baseline]   alpha, noise_seed, gain_bound, control_bound,
///                log10_weight_lo, log10_weight_hi
///   [plant]      dt, cart_mass, pole_mass, pole_length, gravity
///
/// Missing keys keep the preset of the named plant. Vectors are comma
/// separated; "inf" and "-inf" are accepted.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

/// INI rendering; parse_config(to_ini(c)) reproduces c apart from
/// initial_thetas, which have no INI form.
std::string to_ini(const ExperimentConfig& config);

/// Canonical text of everything the oracle value depends on.
std::string oracle_signature(const ExperimentConfig& config);

}  // namespace adobo::cli
