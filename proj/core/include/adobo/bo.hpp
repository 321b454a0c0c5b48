#pragma once

#include <random>

#include "adobo/gp.hpp"
#include "adobo/types.hpp"

namespace adobo::bo {

struct AcquisitionConfig {
  int n_random = 2000;      // uniform samples in the box
  int n_refine = 5;         // best candidates handed to the pattern search
  int refine_iters = 50;
  double xi = 0.0;          // exploration offset
  int n_local = 500;        // Gaussian perturbations of the best observations
  double local_scale = 0.05;  // perturbation std as a fraction of box width

  void validate() const;
};

/// Expected improvement below the incumbent T for a minimization problem:
/// sigma * (z Phi(z) + phi(z)), z = (T - mu - xi) / sigma.
double expected_improvement(double mu, double sigma, double incumbent, double xi = 0.0);

/// log of expected_improvement, accurate far into the tail where EI itself
/// underflows. Returns -inf where EI is exactly zero.
double log_expected_improvement(double mu, double sigma, double incumbent, double xi = 0.0);

struct QueryResult {
  Vector point;
  double log_ei = 0.0;
  /// Best log EI among the raw (unrefined) candidates.
  double best_raw_log_ei = 0.0;
  int evaluations = 0;
};

/// Maximizes EI over the box. The incumbent is the minimum GP target.
QueryResult next_query_detailed(const gp::GpModel& gp, const Box& bounds,
                                const AcquisitionConfig& cfg, std::mt19937_64& rng);

Vector next_query(const gp::GpModel& gp, const Box& bounds, const AcquisitionConfig& cfg,
                  std::mt19937_64& rng);

}  // namespace adobo::bo
