#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "adobo/control.hpp"
#include "adobo/error.hpp"
#include "adobo/plants.hpp"
#include "adobo/qp.hpp"
#include "support/active_set.hpp"

using namespace adobo;
using namespace adobo::control;
using adobo::testing::enumerate_active_sets;
using adobo::testing::rollout_cost;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinearModel scalar_model(double a, double b) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b)};
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Matrix::NullaryExpr(r, c, [&] { return u(rng); });
}

CostSpec random_cost(std::mt19937_64& rng, Eigen::Index nx, Eigen::Index nu) {
  const Matrix q = random_matrix(rng, nx, nx);
  const Matrix r = random_matrix(rng, nu, nu);
  const Matrix qf = random_matrix(rng, nx, nx);
  CostSpec c = CostSpec::identity(nx, nu);
  c.Q = q * q.transpose();
  c.R = r * r.transpose() + 0.1 * Matrix::Identity(nu, nu);
  c.Qf = qf * qf.transpose();
  return c;
}

CostSpec lin2d_hinge_cost() {
  CostSpec c = CostSpec::identity(2, 1);
  Vector lo(2);
  lo << 0.5, -0.4;
  c.soft_bounds = SoftBounds{lo, Vector::Constant(2, kInf), 100.0};
  return c;
}

}  // namespace

TEST(Lqr, OneStepScalar) {
  const LqrPolicy p = lqr_backward(scalar_model(1, 1), CostSpec::identity(1, 1), 1);
  EXPECT_DOUBLE_EQ(p.gains[0](0, 0), -0.5);
  EXPECT_DOUBLE_EQ(p.value_mats[0](0, 0), 1.5);
  EXPECT_DOUBLE_EQ(p.value_mats[1](0, 0), 1.0);
}

TEST(Lqr, ThirtyStepsNearGoldenRatio) {
  const LqrPolicy p = lqr_backward(scalar_model(1, 1), CostSpec::identity(1, 1), 30);
  EXPECT_NEAR(p.value_mats[0](0, 0), 1.618033988749895, 1e-12);
  EXPECT_EQ(std::floor(p.value_mats[0](0, 0) * 100) / 100, 1.61);
}

TEST(Lqr, ZeroInputMatrixGivesZeroGains) {
  LinearModel m{Matrix::Identity(2, 2), Matrix::Zero(2, 1)};
  const LqrPolicy p = lqr_backward(m, CostSpec::identity(2, 1), 10);
  for (const auto& k : p.gains) EXPECT_TRUE(k.isZero());
}

TEST(Lqr, RejectsHingeCost) {
  EXPECT_THROW(lqr_backward(plants::true_model(plants::make_plant(plants::PlantKind::Linear2D)),
                            lin2d_hinge_cost(), 5),
               std::invalid_argument);
}

TEST(Lqr, ReferenceIsFixedPoint) {
  CostSpec c = CostSpec::identity(1, 1);
  c.x_ref = Vector::Constant(1, 2.0);
  c.u_ref = Vector::Constant(1, -0.3);
  const LqrPolicy p = lqr_backward(scalar_model(0.9, 1.2), c, 8);
  EXPECT_DOUBLE_EQ(p.control(c.x_ref, 3)[0], -0.3);
}

TEST(Property, ValueMatricesSymmetricPsd) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const LinearModel m{random_matrix(rng, 3, 3, 1.5), random_matrix(rng, 3, 2)};
    const LqrPolicy p = lqr_backward(m, random_cost(rng, 3, 2), 30);
    for (const auto& pk : p.value_mats) {
      EXPECT_LE((pk - pk.transpose()).cwiseAbs().maxCoeff(), 1e-10 * (1 + pk.norm()));
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (pk + pk.transpose()));
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * (1 + pk.norm()));
    }
  }
}

TEST(Property, CostToGoEqualsRolloutCost) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const LinearModel m{random_matrix(rng, 3, 3, 1.2), random_matrix(rng, 3, 2)};
    const CostSpec c = random_cost(rng, 3, 2);
    const LqrPolicy p = lqr_backward(m, c, 20);
    const Vector x0 = random_matrix(rng, 3, 1);
    std::vector<Vector> us;
    Vector x = x0;
    for (int k = 0; k < 20; ++k) {
      us.push_back(p.control(x, k));
      x = m.A * x + m.B * us.back();
    }
    const double predicted = x0.dot(p.value_mats[0] * x0);
    EXPECT_NEAR(rollout_cost(m, c, x0, us), predicted, 1e-8 * predicted);
  }
}

TEST(Property, ShrinkingHorizonReusesGains) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearModel m{random_matrix(rng, 3, 3), random_matrix(rng, 3, 2)};
    const CostSpec c = random_cost(rng, 3, 2);
    const LqrPolicy full = lqr_backward(m, c, 15);
    for (int k = 0; k < 15; ++k) {
      const LqrPolicy tail = lqr_backward(m, c, 15 - k);
      EXPECT_LE((full.gains[static_cast<std::size_t>(k)] - tail.gains[0]).cwiseAbs().maxCoeff(),
                1e-10);
    }
  }
}

TEST(Mpc, SingleStepScalar) {
  const MpcSolution s =
      mpc_solve(scalar_model(1, 1), CostSpec::identity(1, 1), Vector::Ones(1), 0, 1);
  ASSERT_EQ(s.controls.size(), 1u);
  EXPECT_NEAR(s.controls[0][0], -0.5, 1e-6);
  EXPECT_NEAR(s.objective, 1.5, 1e-6);
}

TEST(Mpc, ShrinkingWindowLength) {
  const MpcSolution s =
      mpc_solve(scalar_model(1, 1), CostSpec::identity(1, 1), Vector::Ones(1), 25, 30);
  EXPECT_EQ(s.controls.size(), 5u);
}

TEST(Property, MpcMatchesLqrWithoutHinge) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearModel m{random_matrix(rng, 3, 3, 1.3), random_matrix(rng, 3, 2)};
    CostSpec c = random_cost(rng, 3, 2);
    c.u_ref = random_matrix(rng, 2, 1);
    c.x_ref = (Matrix::Identity(3, 3) - m.A).lu().solve(m.B * c.u_ref);
    if (trial % 2) c.soft_bounds = SoftBounds{Vector::Constant(3, -1.0), Vector::Ones(3), 0.0};
    const LqrPolicy p = lqr_backward(m, c, 12);
    const Vector x = random_matrix(rng, 3, 1);
    for (int k : {0, 5, 11}) {
      const MpcSolution s = mpc_solve(m, c, x, k, 12);
      const Vector expected = p.control(x, k);
      EXPECT_LE((s.controls[0] - expected).cwiseAbs().maxCoeff(), 1e-5 * (1 + expected.norm()));
    }
  }
}

TEST(Mpc, MatchesActiveSetEnumerationOnHingeSystem) {
  const LinearModel m = plants::true_model(plants::make_plant(plants::PlantKind::Linear2D));
  const CostSpec c = lin2d_hinge_cost();
  std::vector<Vector> starts;
  for (auto [a, b] : {std::pair{1.0, 0.0}, {0.6, -0.5}, {2.0, -1.0}, {0.3, 0.8}, {-1.0, 0.2}}) {
    Vector x(2);
    x << a, b;
    starts.push_back(x);
  }
  for (const auto& x0 : starts) {
    const auto reference = enumerate_active_sets(m, c, x0, 3);
    const MpcSolution s = mpc_solve(m, c, x0, 0, 3);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(s.controls[k][0], reference[k][0], 1e-4) << "x0 = " << x0.transpose();
    }
    EXPECT_NEAR(s.objective, rollout_cost(m, c, x0, reference), 1e-4 * (1 + s.objective));
  }
}

TEST(Mpc, StructuredAgreesWithCondensed) {
  std::mt19937_64 rng(5);
  const LinearModel lin2d = plants::true_model(plants::make_plant(plants::PlantKind::Linear2D));
  for (int trial = 0; trial < 20; ++trial) {
    LinearModel m = lin2d;
    m.A += random_matrix(rng, 2, 2, 0.3);
    m.B += random_matrix(rng, 2, 1, 0.3);
    const Vector x0 = random_matrix(rng, 2, 1, 2.0);
    const MpcSolution a = mpc_solve(m, lin2d_hinge_cost(), x0, 0, 10);
    const MpcSolution b = mpc_solve_condensed(m, lin2d_hinge_cost(), x0, 0, 10);
    EXPECT_NEAR(a.objective, b.objective, 1e-5 * (1 + std::abs(b.objective)));
    for (std::size_t k = 0; k < a.controls.size(); ++k) {
      EXPECT_NEAR(a.controls[k][0], b.controls[k][0], 1e-3 * (1 + std::abs(b.controls[k][0])));
    }
  }
}

TEST(Mpc, UnstableModelLongHorizonConverges) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearModel m{random_matrix(rng, 4, 4, 2.0), random_matrix(rng, 4, 1, 2.0)};
    CostSpec c = random_cost(rng, 4, 1);
    c.soft_bounds = SoftBounds{Vector::Constant(4, -0.5), Vector::Constant(4, 0.5), 100.0};
    const MpcSolution s = mpc_solve(m, c, random_matrix(rng, 4, 1), 0, 30);
    EXPECT_LE(s.kkt_residual, 1e-6);
  }
}

TEST(Property, MpcNeverWorseThanLqrSequenceOnSameQp) {
  std::mt19937_64 rng(7);
  const LinearModel m = plants::true_model(plants::make_plant(plants::PlantKind::Linear2D));
  const CostSpec hinge = lin2d_hinge_cost();
  const LqrPolicy lqr = lqr_backward(m, CostSpec::identity(2, 1), 8);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x0 = random_matrix(rng, 2, 1, 2.0);
    std::vector<Vector> us;
    Vector x = x0;
    for (int k = 0; k < 8; ++k) {
      us.push_back(lqr.control(x, k));
      x = m.A * x + m.B * us.back();
    }
    const double lqr_value = rollout_cost(m, hinge, x0, us);
    const MpcSolution s = mpc_solve(m, hinge, x0, 0, 8);
    EXPECT_LE(s.objective, lqr_value + 1e-6 * (1 + lqr_value));
  }
}

TEST(Policy, FirstControlConsistency) {
  const LinearModel m = scalar_model(1, 1);
  const Policy lqr = synthesize(m, CostSpec::identity(1, 1), 30, ControllerKind::Lqr);
  const Policy mpc = synthesize(m, CostSpec::identity(1, 1), 30, ControllerKind::Mpc);
  EXPECT_NEAR(policy_first_control(lqr, Vector::Ones(1), 29)[0], -0.5, 1e-12);
  EXPECT_NEAR(policy_first_control(mpc, Vector::Ones(1), 29)[0], -0.5, 1e-6);
  EXPECT_NEAR(policy_first_control(lqr, Vector::Ones(1), 3)[0],
              policy_first_control(mpc, Vector::Ones(1), 3)[0], 1e-5);
  EXPECT_EQ(policy_first_control(lqr, Vector::Zero(1), 0)[0], 0.0);
}

TEST(Qp, KktResidualOfSolution) {
  const LinearModel m = plants::true_model(plants::make_plant(plants::PlantKind::Linear2D));
  Vector x0(2);
  x0 << 0.6, -0.5;
  const QpProblem qp = build_mpc_qp(m, lin2d_hinge_cost(), x0, 0, 6);
  const QpSolution s = solve_qp(qp);
  EXPECT_LE(kkt_residual(qp.to_dense(), s.z, s.multipliers), 1e-6);
  EXPECT_NEAR(s.objective, qp.objective_for_controls(s.z.head(qp.num_controls())),
              1e-6 * (1 + std::abs(s.objective)));
}

TEST(Qp, IterationCapReportsResidual) {
  const LinearModel m = plants::true_model(plants::make_plant(plants::PlantKind::Linear2D));
  Vector x0(2);
  x0 << 0.6, -0.5;
  QpOptions opts;
  opts.max_iterations = 1;
  try {
    mpc_solve(m, lin2d_hinge_cost(), x0, 0, 6, opts);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("QP not converged"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
  }
}
