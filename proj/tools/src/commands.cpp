#include "adobo/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "adobo/baselines.hpp"
#include "adobo/cli/config_io.hpp"
#include "adobo/cli/run_store.hpp"
#include "adobo/oracle.hpp"

namespace adobo::cli {

namespace {

plants::PlantKind plant_kind(const std::string& name) {
  try {
    return plants::plant_from_name(name).kind;
  } catch (const std::invalid_argument&) {
    throw ConfigError("unknown plant '" + name + "' (dubins|lin1d|lin2d|cartpole)");
  }
}

}  // namespace

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig c;
  if (o.config_path) {
    c = load_config(*o.config_path);
    if (o.plant && plant_kind(*o.plant) != c.plant.kind) {
      throw ConfigError("--plant " + *o.plant + " conflicts with " + *o.config_path);
    }
  } else {
    c = default_config(plant_kind(o.plant.value_or("dubins")));
  }
  if (o.method) {
    try {
      c.method = method_from_name(*o.method);
    } catch (const std::invalid_argument&) {
      throw ConfigError("unknown method '" + *o.method + "' (adobo|qr|klearn|ls|useq)");
    }
  }
  if (o.budget) c.budget = *o.budget;
  if (o.warp) c.warp = *o.warp;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s.front() == '-') {
      throw ConfigError("bad seed list '" + text + "'");
    }
    return static_cast<std::uint64_t>(v);
  };
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = number(text.substr(0, dots));
    const auto hi = number(text.substr(dots + 2));
    if (hi < lo || hi - lo > 100000) throw ConfigError("bad seed range '" + text + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    seeds.push_back(number(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

std::vector<std::filesystem::path> run_command(const RunOptions& options, std::ostream& log) {
  const ExperimentConfig base = build_config(options.overrides);
  std::vector<std::uint64_t> seeds = options.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  double oracle_cost = 0.0;
  if (base.oracle_cost) {
    oracle_cost = *base.oracle_cost;
  } else {
    bool cached = false;
    oracle_cost = cached_oracle(base, options.out / "oracle-cache", &cached);
    log << "oracle J* = " << oracle_cost << (cached ? " (cached)" : "") << '\n';
  }

  std::vector<std::filesystem::path> dirs(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::mutex log_mutex;
  std::size_t next = 0;

  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::lock_guard lock(log_mutex);
        if (next == seeds.size()) return;
        i = next++;
      }
      ExperimentConfig c = base;
      c.seed = seeds[i];
      c.oracle_cost = oracle_cost;
      const auto dir = options.out / run_name(c);
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto records = baselines::run_method(c);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::filesystem::create_directories(dir);
        write_records_csv(dir / "records.csv", method_name(c.method), records);
        write_gp_dataset(dir / "gp_dataset.csv", records);
        const auto summary = summarize(c, records, oracle_cost, secs);
        write_summary(dir / "summary.json", summary);
        std::ofstream(dir / "config.ini") << to_ini(c);
        dirs[i] = dir;
        std::lock_guard lock(log_mutex);
        char line[160];
        std::snprintf(line, sizeof line, "%s: J_best %.6g  eta %.3f%%  %.1fs\n",
                      dir.filename().c_str(), summary.best_cost, summary.final_eta, secs);
        log << line << std::flush;
      } catch (const std::exception& e) {
        errors[i] = dir.filename().string() + ": " + e.what();
      }
    }
  };

  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, seeds.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  std::string failed;
  for (const auto& e : errors) {
    if (!e.empty()) failed += (failed.empty() ? "" : "; ") + e;
  }
  if (!failed.empty()) throw std::runtime_error(failed);
  return dirs;
}

double oracle_command(const Overrides& overrides, const std::filesystem::path& out,
                      std::ostream& log, std::uint64_t oracle_seed) {
  const ExperimentConfig c = build_config(overrides);
  bool cached = false;
  const double cost = cached_oracle(c, out / "oracle-cache", &cached, oracle_seed);
  char line[128];
  std::snprintf(line, sizeof line, "%s J* = %.10g%s\n", plants::plant_name(c.plant.kind).c_str(),
                cost, cached ? " (cached)" : "");
  log << line;
  return cost;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void compare_command(const CompareOptions& options, std::ostream& out) {
  if (options.run_dirs.empty()) throw ConfigError("compare needs at least one run directory");
  struct Run {
    RunSummary summary;
    std::vector<double> eta;
  };
  std::map<std::string, std::vector<Run>> by_method;
  std::string plant;
  int shortest = std::numeric_limits<int>::max();
  for (const auto& dir : options.run_dirs) {
    Run run{read_summary(dir / "summary.json"), read_eta_column(dir / "records.csv")};
    if (plant.empty()) plant = run.summary.plant;
    if (run.summary.plant != plant) {
      throw ConfigError("runs on different plants: " + plant + " and " + run.summary.plant +
                        " (" + dir.string() + ")");
    }
    shortest = std::min(shortest, static_cast<int>(run.eta.size()));
    by_method[run.summary.method].push_back(std::move(run));
  }
  for (const int k : options.checkpoints) {
    if (k < 1 || k > shortest) {
      throw ConfigError("checkpoint " + std::to_string(k) + " outside 1.." +
                        std::to_string(shortest));
    }
  }
  auto column = [](const std::vector<Run>& runs, int k) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.eta[static_cast<std::size_t>(k - 1)]);
    return v;
  };

  char buf[128];
  out << "plant " << plant << "  eta % median [q25, q75]\n";
  std::snprintf(buf, sizeof buf, "%-8s %5s", "method", "runs");
  out << buf;
  for (const int k : options.checkpoints) {
    std::snprintf(buf, sizeof buf, " %26s", ("n=" + std::to_string(k)).c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& [method, runs] : by_method) {
    std::snprintf(buf, sizeof buf, "%-8s %5zu", method.c_str(), runs.size());
    out << buf;
    for (const int k : options.checkpoints) {
      const auto v = column(runs, k);
      std::snprintf(buf, sizeof buf, " %9.3f [%6.3f, %6.3f]", quantile(v, 0.5), quantile(v, 0.25),
                    quantile(v, 0.75));
      out << buf;
    }
    out << '\n';
  }

  if (!options.curves_csv.empty()) {
    std::ofstream csv(options.curves_csv);
    if (!csv) throw std::runtime_error("cannot write " + options.curves_csv.string());
    csv << "method,n,median,q25,q75\n";
    for (const auto& [method, runs] : by_method) {
      for (int k = 1; k <= shortest; ++k) {
        const auto v = column(runs, k);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g", k, quantile(v, 0.5),
                      quantile(v, 0.25), quantile(v, 0.75));
        csv << method << ',' << buf << '\n';
      }
    }
  }
}

}  // namespace adobo::cli
