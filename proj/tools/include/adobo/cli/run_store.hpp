#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adobo/experiment.hpp"

namespace adobo::cli {

struct RunSummary {
  std::string method;
  std::string plant;
  std::uint64_t seed = 0;
  int budget = 0;
  double oracle_cost = 0.0;
  double best_cost = 0.0;
  double final_eta = 0.0;
  Vector best_theta;
  int penalized = 0;
  double wall_time_s = 0.0;
};

/// "<method>-<plant>-seed<k>"
std::string run_name(const ExperimentConfig& config);

void write_records_csv(const std::filesystem::path& file, const std::string& method,
                       const std::vector<RunRecord>& records);
void write_gp_dataset(const std::filesystem::path& file, const std::vector<RunRecord>& records);
void write_summary(const std::filesystem::path& file, const RunSummary& summary);

RunSummary summarize(const ExperimentConfig& config, const std::vector<RunRecord>& records,
                     double oracle_cost, double wall_time_s);
RunSummary read_summary(const std::filesystem::path& file);

/// eta column of a records.csv, in iteration order.
std::vector<double> read_eta_column(const std::filesystem::path& file);

/// Hex SHA-256 of the text.
std::string sha256_hex(const std::string& text);

/// Oracle value from <cache_dir>/<sha256(signature + oracle seed)>.json,
/// computing and storing it when absent.
double cached_oracle(const ExperimentConfig& config, const std::filesystem::path& cache_dir,
                     bool* from_cache = nullptr, std::uint64_t oracle_seed = 0);

}  // namespace adobo::cli
