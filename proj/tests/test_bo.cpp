#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "adobo/bo.hpp"
#include "adobo/gp.hpp"

using namespace adobo;
using namespace adobo::bo;

namespace {

gp::KernelParams iso(double sf, double l, double sn) {
  gp::KernelParams p;
  p.signal_std = sf;
  p.lengthscales = Vector::Constant(1, l);
  p.noise_std = sn;
  return p;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

gp::GpModel quadratic_surrogate() {
  // y = |theta|^2 sampled on a 5x5 grid of [-2, 2]^2
  std::vector<Vector> xs;
  std::vector<double> ys;
  for (double a : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
    for (double b : {-2.0, -1.5, -0.5, 1.0, 2.0}) {
      Vector x(2);
      x << a, b;
      xs.push_back(x);
      ys.push_back(x.squaredNorm());
    }
  }
  return gp::GpModel::from_points(iso(3.0, 1.5, 1e-3), xs, ys);
}

}  // namespace

TEST(ExpectedImprovement, ZeroVarianceNoImprovement) {
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.0), 0.0);
}

TEST(ExpectedImprovement, AtIncumbent) {
  EXPECT_NEAR(expected_improvement(1.0, 2.0, 1.0), 0.797884560802865, 1e-14);
}

TEST(ExpectedImprovement, LargeMarginApproachesGap) {
  EXPECT_NEAR(expected_improvement(-9.0, 0.1, 1.0), 10.0, 1e-9);
}

TEST(ExpectedImprovement, ClosedFormOnGrid) {
  for (double mu = -3; mu <= 3; mu += 0.25) {
    for (double sigma : {0.05, 0.5, 1.0, 3.0}) {
      const double z = (0.5 - mu) / sigma;
      const double expected = sigma * (z * normal_cdf(z) + normal_pdf(z));
      EXPECT_NEAR(expected_improvement(mu, sigma, 0.5), expected, 1e-12 * (1 + expected));
    }
  }
}

TEST(ExpectedImprovement, LogFormAgreesAndSurvivesTail) {
  for (double mu : {-1.0, 0.0, 0.7, 2.0}) {
    EXPECT_NEAR(std::exp(log_expected_improvement(mu, 0.4, 0.5)), expected_improvement(mu, 0.4, 0.5),
                1e-12);
  }
  const double deep = log_expected_improvement(50.0, 1.0, 0.0);
  EXPECT_TRUE(std::isfinite(deep));
  EXPECT_LT(deep, log_expected_improvement(40.0, 1.0, 0.0));
  EXPECT_EQ(log_expected_improvement(2.0, 0.0, 1.0), -std::numeric_limits<double>::infinity());
}

TEST(Property, EiMonotoneInMeanAndSigma) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> s(0.01, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu = u(rng), sigma = s(rng), t = u(rng);
    const double ei = expected_improvement(mu, sigma, t);
    EXPECT_GE(ei, 0.0);
    EXPECT_LE(expected_improvement(mu + 0.1, sigma, t), ei + 1e-15);
    if (mu <= t) {
      EXPECT_GE(expected_improvement(mu, sigma * 1.1, t), ei - 1e-15);
    }
  }
}

TEST(NextQuery, AvoidsSingleNoiseFreeObservation) {
  const Box box = Box::uniform(2, -1.0, 1.0);
  const gp::GpModel gp(iso(1.0, 0.5, 0.0), Matrix::Zero(2, 1), Vector::Zero(1));
  std::mt19937_64 rng(0);
  const Vector q = next_query(gp, box, {}, rng);
  EXPECT_GT(q.norm(), 1e-3);
  EXPECT_TRUE(box.contains(q));
}

TEST(NextQuery, QuadraticSurrogateMeanBelowIncumbentAndNearGridOptimum) {
  const gp::GpModel gp = quadratic_surrogate();
  const Box box = Box::uniform(2, -2.0, 2.0);
  const double incumbent = gp.targets().minCoeff();
  std::mt19937_64 rng(3);
  const QueryResult r = next_query_detailed(gp, box, {}, rng);
  EXPECT_LT(gp.posterior(r.point).mean, incumbent);

  double grid_best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      Vector x(2);
      x << -2 + 0.04 * i, -2 + 0.04 * j;
      const auto p = gp.posterior(x);
      grid_best = std::max(grid_best, log_expected_improvement(p.mean, std::sqrt(p.variance),
                                                               incumbent));
    }
  }
  EXPECT_GE(r.log_ei, grid_best - 0.05);
}

TEST(NextQuery, RefinementNeverLoses) {
  const gp::GpModel gp = quadratic_surrogate();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const QueryResult r = next_query_detailed(gp, Box::uniform(2, -2.0, 2.0), {}, rng);
    EXPECT_GE(r.log_ei, r.best_raw_log_ei);
  }
}

TEST(NextQuery, DeterministicForFixedSeed) {
  const gp::GpModel gp = quadratic_surrogate();
  std::mt19937_64 a(17), b(17);
  EXPECT_EQ(next_query(gp, Box::uniform(2, -2.0, 2.0), {}, a),
            next_query(gp, Box::uniform(2, -2.0, 2.0), {}, b));
}

TEST(AcquisitionConfigTest, RejectsEmptyCandidatePool) {
  AcquisitionConfig c;
  c.n_random = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
