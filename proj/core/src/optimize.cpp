#include "adobo/optimize.hpp"

#include <cmath>
#include <limits>

namespace adobo::optim {
namespace {

Vector project(const Vector& x, const std::optional<Box>& box) {
  return box ? box->clamp(x) : x;
}

double projected_gradient_norm(const Vector& x, const Vector& g, const std::optional<Box>& box) {
  if (!box) return g.lpNorm<Eigen::Infinity>();
  return (box->clamp(x - g) - x).lpNorm<Eigen::Infinity>();
}

// Coordinates stuck on a bound with the gradient pushing them out of the box.
std::vector<bool> active_set(const Vector& x, const Vector& g, const std::optional<Box>& box) {
  std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
  if (!box) return active;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    active[i] = (x[i] <= box->lower[i] && g[i] > 0.0) || (x[i] >= box->upper[i] && g[i] < 0.0);
  }
  return active;
}

}  // namespace

BfgsResult minimize_bfgs(const DifferentiableFunction& f, const Vector& x0,
                         const std::optional<Box>& box, const BfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = project(x0, box);
  Vector g(n);
  res.value = f(res.x, &g);
  if (!std::isfinite(res.value) || !g.allFinite()) {
    res.projected_gradient_norm = std::numeric_limits<double>::infinity();
    return res;
  }

  Matrix H = Matrix::Identity(n, n);
  bool fresh = true;
  int small_steps = 0;
  std::vector<bool> prev_active = active_set(res.x, g, box);

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    res.projected_gradient_norm = projected_gradient_norm(res.x, g, box);
    if (res.projected_gradient_norm <= opts.gradient_tolerance) {
      res.converged = true;
      return res;
    }

    const std::vector<bool> active = active_set(res.x, g, box);
    if (active != prev_active) {
      H.setIdentity();
      fresh = true;
      prev_active = active;
    }
    Vector g_free = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[i]) g_free[i] = 0.0;
    Vector d = -(H * g_free);
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[i]) d[i] = 0.0;
    if (g_free.dot(d) >= 0.0) {
      H.setIdentity();
      fresh = true;
      d = -g_free;
    }

    double t = fresh ? std::min(1.0, 1.0 / std::max(1e-300, g_free.lpNorm<Eigen::Infinity>())) : 1.0;
    bool accepted = false;
    Vector x_new(n), g_new(n);
    double f_new = 0.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = project(res.x + t * d, box);
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() &&
          f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      H.setIdentity();
      fresh = true;
      continue;
    }

    const Vector s = x_new - res.x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      if (fresh) H *= sy / y.squaredNorm();
      const Vector Hy = H * y;
      H += rho * ((1.0 + rho * y.dot(Hy)) * s * s.transpose() - Hy * s.transpose() -
                  s * Hy.transpose());
      fresh = false;
    }

    const double decrease = res.value - f_new;
    res.x = x_new;
    g = g_new;
    res.value = f_new;
    if (decrease <= opts.function_tolerance * (1.0 + std::abs(f_new))) {
      if (++small_steps >= 2) break;
    } else {
      small_steps = 0;
    }
  }
  res.projected_gradient_norm = projected_gradient_norm(res.x, g, box);
  res.converged = res.projected_gradient_norm <= opts.gradient_tolerance;
  return res;
}

Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                   double rel_step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace adobo::optim
