#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "adobo/cost.hpp"
#include "adobo/error.hpp"
#include "adobo/types.hpp"

using namespace adobo;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Trajectory scalar_trajectory(std::vector<double> xs, std::vector<double> us) {
  Trajectory t;
  for (double x : xs) t.states.push_back(Vector::Constant(1, x));
  for (double u : us) t.controls.push_back(Vector::Constant(1, u));
  return t;
}

}  // namespace

TEST(Pack, ZeroModelPacksToZeros) {
  const LinearModel m{Matrix::Zero(2, 2), Matrix::Zero(2, 1)};
  const ThetaVector t = pack_model(m);
  EXPECT_EQ(t.dim(), 6);
  EXPECT_TRUE(t.values.isZero());
}

TEST(Pack, RowMajorAThenB) {
  LinearModel m{Matrix(2, 2), Matrix(2, 1)};
  m.A << 1, 2, 3, 4;
  m.B << 5, 6;
  Vector expected(6);
  expected << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(pack_model(m).values, expected);
}

TEST(Pack, RoundTripRandom) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearModel m{random_matrix(rng, 3, 3), random_matrix(rng, 3, 2)};
    const LinearModel back = unpack_model(pack_model(m), 3, 2);
    EXPECT_EQ(back.A, m.A);
    EXPECT_EQ(back.B, m.B);
  }
}

TEST(Unpack, ScalarTheta) {
  const LinearModel m = unpack_model(Vector::Ones(2), 1, 1);
  EXPECT_EQ(m.A(0, 0), 1.0);
  EXPECT_EQ(m.B(0, 0), 1.0);
}

TEST(Unpack, FifteenEntriesSplitNineAndSix) {
  Vector theta(15);
  for (int i = 0; i < 15; ++i) theta[i] = i;
  const LinearModel m = unpack_model(theta, 3, 2);
  EXPECT_EQ(m.A(2, 2), 8.0);
  EXPECT_EQ(m.A(0, 1), 1.0);
  EXPECT_EQ(m.B(0, 0), 9.0);
  EXPECT_EQ(m.B(2, 1), 14.0);
}

TEST(Unpack, WrongLengthThrows) {
  try {
    unpack_model(Vector::Ones(5), 2, 1);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("theta/shape mismatch"), std::string::npos);
  }
}

TEST(BoxTest, UnitMapRoundTrip) {
  const Box b(Vector::Constant(3, -2.0), Vector::Constant(3, 4.0));
  Vector x(3);
  x << -2, 1, 4;
  const Vector z = b.to_unit(x);
  EXPECT_DOUBLE_EQ(z[0], 0.0);
  EXPECT_DOUBLE_EQ(z[1], 0.5);
  EXPECT_DOUBLE_EQ(z[2], 1.0);
  EXPECT_TRUE(b.from_unit(z).isApprox(x));
  EXPECT_TRUE(b.contains(b.clamp(Vector::Constant(3, 9.0))));
}

TEST(Cost, ZeroTrajectoryCostsNothing) {
  const CostSpec c = CostSpec::identity(1, 1);
  EXPECT_EQ(evaluate_cost(scalar_trajectory({0, 0, 0}, {0, 0}), c), 0.0);
}

TEST(Cost, OneStepScalar) {
  const CostSpec c = CostSpec::identity(1, 1);
  EXPECT_DOUBLE_EQ(evaluate_cost(scalar_trajectory({1, 0.5}, {-0.5}), c), 1.5);
}

TEST(Cost, HingeBelowLowerBound) {
  CostSpec c = CostSpec::diagonal(Vector::Zero(1), Vector::Ones(1), Vector::Zero(1));
  c.soft_bounds = SoftBounds{Vector::Constant(1, 0.5),
                             Vector::Constant(1, std::numeric_limits<double>::infinity()), 100.0};
  EXPECT_NEAR(evaluate_cost(scalar_trajectory({0.3}, {}), c), 20.0, 1e-12);
  EXPECT_EQ(evaluate_cost(scalar_trajectory({0.7}, {}), c), 0.0);
}

TEST(Cost, VacuousBoundsContributeNothing) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const SoftBounds b{Vector::Constant(2, -inf), Vector::Constant(2, inf), 50.0};
  EXPECT_TRUE(b.is_vacuous());
  Vector x(2);
  x << -1e9, 1e9;
  EXPECT_EQ(hinge_violation(x, b), 0.0);
}

TEST(Cost, NonnegativeAndZeroOnlyAtReference) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  CostSpec c = CostSpec::identity(2, 1);
  c.soft_bounds = SoftBounds{Vector::Constant(2, -0.5), Vector::Constant(2, 0.5), 10.0};
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory t;
    for (int k = 0; k < 4; ++k) t.states.push_back(Vector::NullaryExpr(2, [&] { return u(rng); }));
    for (int k = 0; k < 3; ++k) t.controls.push_back(Vector::Constant(1, u(rng)));
    EXPECT_GT(evaluate_cost(t, c), 0.0);
  }
}

TEST(Cost, DimensionMismatchThrows) {
  const CostSpec c = CostSpec::identity(2, 1);
  EXPECT_THROW(evaluate_cost(scalar_trajectory({1, 1}, {0}), c), std::invalid_argument);
}

TEST(Cost, ValidateRejectsIndefiniteR) {
  CostSpec c = CostSpec::identity(1, 1);
  c.R(0, 0) = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
