#pragma once

#include <functional>
#include <optional>

#include "adobo/types.hpp"

namespace adobo::optim {

/// Returns f(x) and, when grad is non-null, writes the gradient into it.
using DifferentiableFunction = std::function<double(const Vector& x, Vector* grad)>;

struct BfgsOptions {
  int max_iterations = 200;
  /// Stop once the projected gradient infinity norm falls below this.
  double gradient_tolerance = 1e-6;
  /// Stop after two consecutive steps with relative decrease below this.
  double function_tolerance = 1e-12;
  int max_backtracks = 40;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Dense quasi-Newton minimization with projection onto an optional box.
/// Variables sitting on a bound with the gradient pointing outward are held
/// fixed for the step.
BfgsResult minimize_bfgs(const DifferentiableFunction& f, const Vector& x0,
                         const std::optional<Box>& box, const BfgsOptions& opts = {});

/// Central finite-difference gradient with step h_i = rel_step * (1 + |x_i|).
Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                   double rel_step = 1e-6);

}  // namespace adobo::optim
