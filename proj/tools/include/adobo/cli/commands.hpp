#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adobo/experiment.hpp"

namespace adobo::cli {

/// Command-line overrides applied on top of a config file or plant preset.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> plant;
  std::optional<std::string> method;
  std::optional<int> budget;
  std::optional<bool> warp;
};

ExperimentConfig build_config(const Overrides& overrides);

/// "3", "1..5" or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct RunOptions {
  Overrides overrides;
  std::vector<std::uint64_t> seeds;  // empty: the config seed
  std::filesystem::path out = "runs";
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// One run directory per seed under `out`; returns the directories.
std::vector<std::filesystem::path> run_command(const RunOptions& options, std::ostream& log);

/// Prints J* and the route that produced it, using the cache under `out`.
double oracle_command(const Overrides& overrides, const std::filesystem::path& out,
                      std::ostream& log, std::uint64_t oracle_seed = 0);

struct CompareOptions {
  std::vector<std::filesystem::path> run_dirs;
  std::vector<int> checkpoints;
  std::filesystem::path curves_csv;  // empty: not written
};

/// Median and interquartile range of eta per method at each checkpoint.
void compare_command(const CompareOptions& options, std::ostream& out);

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace adobo::cli
