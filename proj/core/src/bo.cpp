#include "adobo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "adobo/error.hpp"

namespace adobo::bo {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// log(z Phi(z) + phi(z))
double log_h(double z) {
  if (z > -10.0) return std::log(z * normal_cdf(z) + normal_pdf(z));
  // Asymptotic expansion of the Mills ratio: h = phi(z) / t^2 * (1 - 3/t^2 + 15/t^4 - ...)
  const double t = -z;
  const double inv2 = 1.0 / (t * t);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k + 1.0) * inv2;
    series += term;
  }
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(inv2) +
         std::log(series);
}

struct Scored {
  Matrix points;
  Vector log_ei;
};

class Scorer {
 public:
  Scorer(const gp::GpModel& gp, double xi) : gp_(gp), xi_(xi), incumbent_(gp.targets().minCoeff()) {}

  Vector score(const Matrix& points) {
    Vector out(points.cols());
    constexpr Eigen::Index kChunk = 512;
    Vector mean, var;
    for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
      const Eigen::Index len = std::min(kChunk, points.cols() - start);
      gp_.posterior_batch(points.middleCols(start, len), mean, var);
      for (Eigen::Index i = 0; i < len; ++i) {
        out[start + i] = log_expected_improvement(mean[i], std::sqrt(var[i]), incumbent_, xi_);
      }
    }
    evaluations_ += static_cast<int>(points.cols());
    return out;
  }

  int evaluations() const { return evaluations_; }

 private:
  const gp::GpModel& gp_;
  double xi_;
  double incumbent_;
  int evaluations_ = 0;
};

// Coordinate pattern search; every sweep evaluates all 2D axis moves at once.
std::pair<Vector, double> refine(Scorer& scorer, const Box& bounds, Vector point, double value,
                                 int max_iters) {
  const Eigen::Index d = point.size();
  const Vector width = bounds.width();
  double step = 0.1;
  Matrix moves(d, 2 * d);
  for (int it = 0; it < max_iters && step >= 1e-3; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) {
      moves.col(2 * i) = point;
      moves.col(2 * i + 1) = point;
      moves(i, 2 * i) = std::min(bounds.upper[i], point[i] + step * width[i]);
      moves(i, 2 * i + 1) = std::max(bounds.lower[i], point[i] - step * width[i]);
    }
    const Vector scores = scorer.score(moves);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.size(); ++j)
      if (scores[j] > scores[best]) best = j;
    if (scores[best] > value) {
      value = scores[best];
      point = moves.col(best);
    } else {
      step *= 0.5;
    }
  }
  return {point, value};
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (n_random < 1 || n_refine < 1 || refine_iters < 1 || n_local < 0) {
    throw std::invalid_argument("acquisition counts must be >= 1");
  }
  if (!(xi >= 0.0)) throw std::invalid_argument("xi must be nonnegative");
  if (!(local_scale > 0.0)) throw std::invalid_argument("local_scale must be positive");
}

double expected_improvement(double mu, double sigma, double incumbent, double xi) {
  const double gain = incumbent - mu - xi;
  if (!(sigma > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sigma;
  return std::max(0.0, sigma * (z * normal_cdf(z) + normal_pdf(z)));
}

double log_expected_improvement(double mu, double sigma, double incumbent, double xi) {
  const double gain = incumbent - mu - xi;
  if (!(sigma > 0.0)) return gain > 0.0 ? std::log(gain) : kNegInf;
  return std::log(sigma) + log_h(gain / sigma);
}

QueryResult next_query_detailed(const gp::GpModel& gp, const Box& bounds,
                                const AcquisitionConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (bounds.dim() != gp.dim()) throw DimensionError("bounds do not match GP input dimension");
  const Eigen::Index d = bounds.dim();
  const Vector width = bounds.width();

  // raw candidates: uniform draws, then perturbations of the best observations
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n_centres = static_cast<int>(std::min<Eigen::Index>(5, gp.size()));
  const int n_local = cfg.n_local > 0 ? cfg.n_local : 0;
  Matrix raw(d, cfg.n_random + n_local);
  for (int j = 0; j < cfg.n_random; ++j)
    for (Eigen::Index i = 0; i < d; ++i) raw(i, j) = bounds.lower[i] + unit(rng) * width[i];

  std::vector<Eigen::Index> order(static_cast<std::size_t>(gp.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return gp.targets()[a] < gp.targets()[b];
  });
  for (int j = 0; j < n_local; ++j) {
    const Vector& centre = gp.inputs().col(order[static_cast<std::size_t>(j % n_centres)]);
    Vector p(d);
    for (Eigen::Index i = 0; i < d; ++i) p[i] = centre[i] + cfg.local_scale * width[i] * normal(rng);
    raw.col(cfg.n_random + j) = bounds.clamp(p);
  }

  Scorer scorer(gp, cfg.xi);
  const Vector raw_scores = scorer.score(raw);

  std::vector<Eigen::Index> ranked(static_cast<std::size_t>(raw.cols()));
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return raw_scores[a] > raw_scores[b]; });

  QueryResult result;
  result.point = raw.col(ranked.front());
  result.log_ei = raw_scores[ranked.front()];
  result.best_raw_log_ei = result.log_ei;

  const int n_refine = std::min<int>(cfg.n_refine, static_cast<int>(raw.cols()));
  for (int r = 0; r < n_refine; ++r) {
    const Eigen::Index idx = ranked[static_cast<std::size_t>(r)];
    if (!std::isfinite(raw_scores[idx])) break;
    auto [p, v] = refine(scorer, bounds, raw.col(idx), raw_scores[idx], cfg.refine_iters);
    if (v > result.log_ei) {
      result.point = p;
      result.log_ei = v;
    }
  }
  result.evaluations = scorer.evaluations();
  return result;
}

Vector next_query(const gp::GpModel& gp, const Box& bounds, const AcquisitionConfig& cfg,
                  std::mt19937_64& rng) {
  return next_query_detailed(gp, bounds, cfg, rng).point;
}

}  // namespace adobo::bo
