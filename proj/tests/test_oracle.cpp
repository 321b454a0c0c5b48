#include <gtest/gtest.h>

#include <cmath>

#include "adobo/control.hpp"
#include "adobo/error.hpp"
#include "adobo/experiment.hpp"
#include "adobo/oracle.hpp"

using namespace adobo;
using namespace adobo::oracle;

namespace {

constexpr double kGolden = 1.618033988749895;

double jacobian_lqr_cost(const ExperimentConfig& c) {
  const LinearModel jac = plants::linearize(c.plant, c.cost.x_ref, c.cost.u_ref);
  return closed_loop_evaluate(pack_model(jac).values, c).cost;
}

}  // namespace

TEST(OracleLinear, Linear1D) {
  const auto c = default_config(plants::PlantKind::Linear1D);
  const OracleResult r = oracle_linear(c.plant, c.cost, c.x0, 30);
  EXPECT_EQ(std::floor(r.cost * 100) / 100, 1.61);
  EXPECT_NEAR(r.cost, kGolden, 1e-12);
  EXPECT_EQ(r.method, "riccati");
  EXPECT_EQ(r.controls.size(), 30u);
}

TEST(OracleLinear, ZeroInitialState) {
  const auto c = default_config(plants::PlantKind::Linear1D);
  EXPECT_EQ(oracle_linear(c.plant, c.cost, Vector::Zero(1), 30).cost, 0.0);
}

TEST(OracleLinear, LongHorizonApproachesRiccatiFixedPoint) {
  const auto c = default_config(plants::PlantKind::Linear1D);
  EXPECT_NEAR(oracle_linear(c.plant, c.cost, Vector::Constant(1, 2.0), 200).cost, 4 * kGolden,
              1e-10);
}

TEST(OracleLinear, RejectsHingeCost) {
  const auto c = default_config(plants::PlantKind::Linear2D);
  EXPECT_THROW(oracle_linear(c.plant, c.cost, c.x0, 30), std::invalid_argument);
}

TEST(OracleLinear, HingeRouteIsExactQp) {
  const auto c = default_config(plants::PlantKind::Linear2D);
  const OracleResult r = compute_oracle(c.plant, c.cost, c.x0, c.horizon);
  EXPECT_EQ(r.method, "qp");
  EXPECT_TRUE(r.certified);
  const auto mpc = control::mpc_solve(plants::true_model(c.plant), c.cost, c.x0, 0, c.horizon);
  EXPECT_NEAR(r.cost, mpc.objective, 1e-6 * r.cost);
  EXPECT_NEAR(r.cost, evaluate_cost(plants::rollout(c.plant, c.x0, r.controls), c.cost),
              1e-9 * r.cost);
}

TEST(OracleNonlinear, ConvexCaseMatchesRiccati) {
  const auto c = default_config(plants::PlantKind::Linear1D);
  const OracleResult r = oracle_nonlinear(c.plant, c.cost, c.x0, 30);
  EXPECT_NEAR(r.cost, kGolden, 1e-4);
  EXPECT_TRUE(r.certified);
}

TEST(OracleNonlinear, DubinsSelfConsistentAcrossSeeds) {
  const auto c = default_config(plants::PlantKind::Dubins);
  OracleOptions a, b;
  a.seed = 0;
  b.seed = 7;
  const OracleResult ra = oracle_nonlinear(c.plant, c.cost, c.x0, c.horizon, a);
  const OracleResult rb = oracle_nonlinear(c.plant, c.cost, c.x0, c.horizon, b);
  EXPECT_TRUE(std::isfinite(ra.cost));
  EXPECT_NEAR(ra.cost, rb.cost, 0.01 * ra.cost);
  EXPECT_LE(ra.gradient_norm, a.gradient_tolerance);
}

TEST(OracleNonlinear, CartPoleSelfConsistentAcrossSeeds) {
  const auto c = default_config(plants::PlantKind::CartPole);
  OracleOptions a, b;
  a.seed = 1;
  b.seed = 2;
  const OracleResult ra = oracle_nonlinear(c.plant, c.cost, c.x0, c.horizon, a);
  const OracleResult rb = oracle_nonlinear(c.plant, c.cost, c.x0, c.horizon, b);
  EXPECT_TRUE(ra.certified);
  EXPECT_NEAR(ra.cost, rb.cost, 0.01 * ra.cost);
}

TEST(Property, OracleBelowZeroControlAndJacobianLqr) {
  for (const auto kind : {plants::PlantKind::Dubins, plants::PlantKind::CartPole}) {
    const auto c = default_config(kind);
    const double j = compute_oracle(c.plant, c.cost, c.x0, c.horizon).cost;
    EXPECT_LE(j, zero_control_cost(c));
    EXPECT_LE(j, jacobian_lqr_cost(c));
  }
}

TEST(Property, ReportedCostIsTrueCostOfControls) {
  const auto c = default_config(plants::PlantKind::CartPole);
  const OracleResult r = compute_oracle(c.plant, c.cost, c.x0, c.horizon);
  EXPECT_DOUBLE_EQ(r.cost, evaluate_cost(plants::rollout(c.plant, c.x0, r.controls), c.cost));
}

TEST(Smoothing, UpperBoundsAndConvergesToHinge) {
  const auto c = default_config(plants::PlantKind::CartPole);
  const Trajectory t =
      plants::rollout(c.plant, c.x0, std::vector<Vector>(30, Vector::Constant(1, 0.5)));
  const double exact = evaluate_cost(t, c.cost);
  double previous = std::numeric_limits<double>::infinity();
  for (double tau : {1.0, 1e-1, 1e-2, 1e-3, 1e-5}) {
    const double s = smoothed_cost(t, c.cost, tau);
    EXPECT_GE(s, exact);
    EXPECT_LE(s, previous);
    previous = s;
  }
  EXPECT_NEAR(previous, exact, 1e-2);
}

TEST(OracleNonlinear, IterationStarvedRunReportsIncumbent) {
  const auto c = default_config(plants::PlantKind::Dubins);
  OracleOptions o;
  o.max_iterations = 1;
  o.smoothing = {};
  try {
    oracle_nonlinear(c.plant, c.cost, c.x0, c.horizon, o);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("best cost"), std::string::npos);
  }
}
