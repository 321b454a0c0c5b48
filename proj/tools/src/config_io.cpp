#include "adobo/cli/config_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace adobo::cli {
namespace {

namespace pt = boost::property_tree;

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": [" + key.substr(0, key.find('.')) + "] " +
                      key.substr(key.find('.') + 1) + ": " + what);
  }

  double to_double(const std::string& key, const std::string& text) const {
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) fail(key, "'" + t + "' is not a number");
      return v;
    } catch (const std::logic_error&) {
      fail(key, "'" + t + "' is not a number");
    }
  }

  void number(const std::string& key, double& out) const {
    if (auto v = raw(key)) out = to_double(key, *v);
  }

  template <class Int>
  void integer(const std::string& key, Int& out) const {
    if (auto v = raw(key)) {
      const double d = to_double(key, *v);
      if (d != std::floor(d) || d < 0 || d > 1e15) fail(key, "expected a nonnegative integer");
      out = static_cast<Int>(d);
    }
  }

  void flag(const std::string& key, bool& out) const {
    if (auto v = raw(key)) {
      if (*v == "on" || *v == "true" || *v == "1") {
        out = true;
      } else if (*v == "off" || *v == "false" || *v == "0") {
        out = false;
      } else {
        fail(key, "expected on|off");
      }
    }
  }

  std::optional<Vector> vector(const std::string& key, Eigen::Index expected) const {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> values;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(to_double(key, item));
    if (expected >= 0 && static_cast<Eigen::Index>(values.size()) == 1 && expected > 1) {
      return Vector::Constant(expected, values.front());
    }
    if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected) {
      fail(key, "expected " + std::to_string(expected) + " values, got " +
                    std::to_string(values.size()));
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  }

  const std::string& source() const { return source_; }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const Reader rd(tree, source);

  const std::string plant_name = rd.raw("experiment.plant").value_or("dubins");
  plants::PlantSpec plant;
  try {
    plant = plants::plant_from_name(plant_name);
  } catch (const std::exception&) {
    rd.fail("experiment.plant", "unknown plant '" + plant_name + "' (dubins|lin1d|lin2d|cartpole)");
  }
  ExperimentConfig c = default_config(plant.kind);
  const Eigen::Index nx = c.plant.nx();
  const Eigen::Index nu = c.plant.nu();

  rd.number("plant.dt", c.plant.dt);
  rd.number("plant.cart_mass", c.plant.cartpole.cart_mass);
  rd.number("plant.pole_mass", c.plant.cartpole.pole_mass);
  rd.number("plant.pole_length", c.plant.cartpole.pole_length);
  rd.number("plant.gravity", c.plant.cartpole.gravity);

  if (auto m = rd.raw("experiment.method")) {
    try {
      c.method = method_from_name(*m);
    } catch (const std::exception&) {
      rd.fail("experiment.method", "unknown method '" + *m + "' (adobo|qr|klearn|ls|useq)");
    }
  }
  if (auto k = rd.raw("experiment.controller")) {
    if (*k == "lqr") {
      c.controller = control::ControllerKind::Lqr;
    } else if (*k == "mpc") {
      c.controller = control::ControllerKind::Mpc;
    } else {
      rd.fail("experiment.controller", "expected lqr|mpc");
    }
  }
  rd.integer("experiment.horizon", c.horizon);
  rd.integer("experiment.budget", c.budget);
  rd.integer("experiment.seed", c.seed);
  rd.flag("experiment.warp", c.warp);
  rd.integer("experiment.initial_random", c.initial_random);
  rd.number("experiment.penalty_factor", c.penalty_factor);
  if (auto v = rd.raw("experiment.oracle_cost")) c.oracle_cost = rd.to_double("experiment.oracle_cost", *v);

  auto diag = [&](const std::string& key, Matrix& m, Eigen::Index n) {
    if (auto v = rd.vector(key, n)) m = v->asDiagonal();
  };
  diag("cost.q", c.cost.Q, nx);
  diag("cost.r", c.cost.R, nu);
  diag("cost.qf", c.cost.Qf, nx);
  if (auto v = rd.vector("cost.x_ref", nx)) c.cost.x_ref = *v;
  if (auto v = rd.vector("cost.u_ref", nu)) c.cost.u_ref = *v;
  const auto lower = rd.vector("cost.lower", nx);
  const auto upper = rd.vector("cost.upper", nx);
  const auto weight = rd.raw("cost.weight");
  if (lower || upper || weight) {
    SoftBounds sb = c.cost.soft_bounds.value_or(
        SoftBounds{Vector::Constant(nx, -std::numeric_limits<double>::infinity()),
                   Vector::Constant(nx, std::numeric_limits<double>::infinity()), 0.0});
    if (lower) sb.lower = *lower;
    if (upper) sb.upper = *upper;
    if (weight) sb.weight = rd.to_double("cost.weight", *weight);
    c.cost.soft_bounds = sb;
  }
  if (auto v = rd.vector("initial.x0", nx)) c.x0 = *v;
  rd.flag("initial.linearization", c.seed_with_linearization);

  const Eigen::Index dim = packed_size(nx, nu);
  const Vector blo = rd.vector("bounds.lower", dim).value_or(c.bounds.lower);
  const Vector bhi = rd.vector("bounds.upper", dim).value_or(c.bounds.upper);
  try {
    c.bounds = Box(blo, bhi);
  } catch (const std::exception& e) {
    rd.fail("bounds.lower", e.what());
  }

  rd.integer("bo.n_random", c.acquisition.n_random);
  rd.integer("bo.n_local", c.acquisition.n_local);
  rd.number("bo.local_scale", c.acquisition.local_scale);
  rd.integer("bo.n_refine", c.acquisition.n_refine);
  rd.integer("bo.refine_iters", c.acquisition.refine_iters);
  rd.number("bo.xi", c.acquisition.xi);
  rd.integer("bo.restarts", c.gp.fit.restarts);
  rd.flag("bo.ard", c.gp.ard);
  rd.integer("bo.refit_all_until", c.gp.refit_all_until);
  rd.integer("bo.refit_every", c.gp.refit_every);

  rd.number("baseline.alpha", c.baseline.alpha);
  rd.integer("baseline.noise_seed", c.baseline.noise_seed);
  rd.number("baseline.gain_bound", c.baseline.gain_bound);
  rd.number("baseline.control_bound", c.baseline.control_bound);
  rd.number("baseline.log10_weight_lo", c.baseline.log10_weight_lo);
  rd.number("baseline.log10_weight_hi", c.baseline.log10_weight_hi);

  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "plant = " << plants::plant_name(c.plant.kind) << "\n"
    << "method = " << method_name(c.method) << "\n"
    << "controller = " << (c.controller == control::ControllerKind::Lqr ? "lqr" : "mpc") << "\n"
    << "horizon = " << c.horizon << "\n"
    << "budget = " << c.budget << "\n"
    << "seed = " << c.seed << "\n"
    << "warp = " << (c.warp ? "on" : "off") << "\n"
    << "initial_random = " << c.initial_random << "\n"
    << "penalty_factor = " << fmt_double(c.penalty_factor) << "\n";
  if (c.oracle_cost) o << "oracle_cost = " << fmt_double(*c.oracle_cost) << "\n";
  o << "\n[plant]\n"
    << "dt = " << fmt_double(c.plant.dt) << "\n"
    << "cart_mass = " << fmt_double(c.plant.cartpole.cart_mass) << "\n"
    << "pole_mass = " << fmt_double(c.plant.cartpole.pole_mass) << "\n"
    << "pole_length = " << fmt_double(c.plant.cartpole.pole_length) << "\n"
    << "gravity = " << fmt_double(c.plant.cartpole.gravity) << "\n";
  o << "\n[cost]\n"
    << "q = " << fmt_vector(c.cost.Q.diagonal()) << "\n"
    << "r = " << fmt_vector(c.cost.R.diagonal()) << "\n"
    << "qf = " << fmt_vector(c.cost.Qf.diagonal()) << "\n"
    << "x_ref = " << fmt_vector(c.cost.x_ref) << "\n"
    << "u_ref = " << fmt_vector(c.cost.u_ref) << "\n";
  if (c.cost.soft_bounds) {
    o << "lower = " << fmt_vector(c.cost.soft_bounds->lower) << "\n"
      << "upper = " << fmt_vector(c.cost.soft_bounds->upper) << "\n"
      << "weight = " << fmt_double(c.cost.soft_bounds->weight) << "\n";
  }
  o << "\n[initial]\nx0 = " << fmt_vector(c.x0) << "\n"
    << "linearization = " << (c.seed_with_linearization ? "on" : "off") << "\n";
  o << "\n[bounds]\nlower = " << fmt_vector(c.bounds.lower) << "\n"
    << "upper = " << fmt_vector(c.bounds.upper) << "\n";
  o << "\n[bo]\n"
    << "n_random = " << c.acquisition.n_random << "\n"
    << "n_local = " << c.acquisition.n_local << "\n"
    << "local_scale = " << fmt_double(c.acquisition.local_scale) << "\n"
    << "n_refine = " << c.acquisition.n_refine << "\n"
    << "refine_iters = " << c.acquisition.refine_iters << "\n"
    << "xi = " << fmt_double(c.acquisition.xi) << "\n"
    << "restarts = " << c.gp.fit.restarts << "\n"
    << "ard = " << (c.gp.ard ? "on" : "off") << "\n"
    << "refit_all_until = " << c.gp.refit_all_until << "\n"
    << "refit_every = " << c.gp.refit_every << "\n";
  o << "\n[baseline]\n"
    << "alpha = " << fmt_double(c.baseline.alpha) << "\n"
    << "noise_seed = " << c.baseline.noise_seed << "\n"
    << "gain_bound = " << fmt_double(c.baseline.gain_bound) << "\n"
    << "control_bound = " << fmt_double(c.baseline.control_bound) << "\n"
    << "log10_weight_lo = " << fmt_double(c.baseline.log10_weight_lo) << "\n"
    << "log10_weight_hi = " << fmt_double(c.baseline.log10_weight_hi) << "\n";
  return o.str();
}

std::string oracle_signature(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "plant=" << plants::plant_name(c.plant.kind) << ";dt=" << fmt_double(c.plant.dt)
    << ";cp=" << fmt_double(c.plant.cartpole.cart_mass) << ","
    << fmt_double(c.plant.cartpole.pole_mass) << "," << fmt_double(c.plant.cartpole.pole_length)
    << "," << fmt_double(c.plant.cartpole.gravity) << ";N=" << c.horizon
    << ";x0=" << fmt_vector(c.x0) << ";Q=" << fmt_vector(c.cost.Q.reshaped())
    << ";R=" << fmt_vector(c.cost.R.reshaped()) << ";Qf=" << fmt_vector(c.cost.Qf.reshaped())
    << ";xr=" << fmt_vector(c.cost.x_ref) << ";ur=" << fmt_vector(c.cost.u_ref);
  if (c.cost.soft_bounds) {
    o << ";lo=" << fmt_vector(c.cost.soft_bounds->lower)
      << ";hi=" << fmt_vector(c.cost.soft_bounds->upper)
      << ";w=" << fmt_double(c.cost.soft_bounds->weight);
  }
  return o.str();
}

}  // namespace adobo::cli
