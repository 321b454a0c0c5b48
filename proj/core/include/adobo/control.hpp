#pragma once

#include <variant>
#include <vector>

#include "adobo/cost.hpp"
#include "adobo/qp.hpp"
#include "adobo/types.hpp"

namespace adobo::control {

/// Time-varying finite-horizon LQR solution.
struct LqrPolicy {
  std::vector<Matrix> gains;       // K_0 .. K_{N-1}
  std::vector<Matrix> value_mats;  // P_0 .. P_N
  Vector x_ref;
  Vector u_ref;

  int horizon() const { return static_cast<int>(gains.size()); }
  /// u* + K_k (x - x*)
  ControlVector control(const StateVector& x, int k) const;
};

/// Backward Riccati recursion
///   K_k = -(R + B'P B)^-1 B'P A,  P_k = Q + A'P A + A'P B K_k,  P_N = Qf.
/// Throws NumericalError("Riccati breakdown") if R + B'PB is not positive
/// definite, and std::invalid_argument when the cost has an active hinge.
LqrPolicy lqr_backward(const LinearModel& model, const CostSpec& cost, int horizon);

/// Condensed QP for the window {k, ..., N} starting at x_init, with the
/// dynamics eliminated. Decision variables are u_k..u_{N-1} followed by one
/// slack per (step, bounded state component).
QpProblem build_mpc_qp(const LinearModel& model, const CostSpec& cost, const StateVector& x_init,
                       int k, int horizon);

struct MpcSolution {
  std::vector<ControlVector> controls;
  double objective = 0.0;  // predicted cost of the window, constants included
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Solves the window QP with a primal-dual interior point method whose Newton
/// steps are Riccati sweeps over the stages, so unstable models stay
/// well conditioned. Throws NumericalError("QP not converged ...").
MpcSolution mpc_solve(const LinearModel& model, const CostSpec& cost, const StateVector& x_init,
                      int k, int horizon, const QpOptions& opts = {});

/// Same problem through the condensed QP of build_mpc_qp and solve_qp.
MpcSolution mpc_solve_condensed(const LinearModel& model, const CostSpec& cost,
                                const StateVector& x_init, int k, int horizon,
                                const QpOptions& opts = {});

/// Shrinking-horizon MPC: re-solves the window {k..N} at every call.
struct MpcPolicy {
  LinearModel model;
  CostSpec cost;
  int horizon = 0;
  QpOptions options;
};

enum class ControllerKind { Lqr, Mpc };

/// Controller synthesized from a hypothesized linear model.
using Policy = std::variant<LqrPolicy, MpcPolicy>;

/// LQR for quadratic costs (one backward pass covers every window of the
/// shrinking horizon), MPC otherwise.
Policy synthesize(const LinearModel& model, const CostSpec& cost, int horizon, ControllerKind kind);

/// First control of the optimal sequence for the window {k..N}.
ControlVector policy_first_control(const Policy& policy, const StateVector& x, int k);

}  // namespace adobo::control
