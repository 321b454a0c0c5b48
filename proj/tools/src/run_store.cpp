#include "adobo/cli/run_store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "adobo/cli/config_io.hpp"
#include "adobo/oracle.hpp"

namespace adobo::cli {
namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string run_name(const ExperimentConfig& config) {
  return method_name(config.method) + "-" + plants::plant_name(config.plant.kind) + "-seed" +
         std::to_string(config.seed);
}

void write_records_csv(const std::filesystem::path& file, const std::string& method,
                       const std::vector<RunRecord>& records) {
  auto out = open_out(file);
  const Eigen::Index dim = records.empty() ? 0 : records.front().theta.size();
  out << "method,n";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",theta_" << d + 1;
  out << ",J,y,J_best,eta\n";
  for (const auto& r : records) {
    out << method << ',' << r.iteration;
    for (Eigen::Index d = 0; d < dim; ++d) out << ',' << g17(r.theta[d]);
    out << ',' << g17(r.cost) << ',' << g17(r.warped_cost) << ',' << g17(r.best_cost) << ','
        << g17(r.eta) << '\n';
  }
}

void write_gp_dataset(const std::filesystem::path& file, const std::vector<RunRecord>& records) {
  auto out = open_out(file);
  const Eigen::Index dim = records.empty() ? 0 : records.front().theta.size();
  for (Eigen::Index d = 0; d < dim; ++d) out << "theta_" << d + 1 << ',';
  out << "y\n";
  for (const auto& r : records) {
    for (Eigen::Index d = 0; d < dim; ++d) out << g17(r.theta[d]) << ',';
    out << g17(r.warped_cost) << '\n';
  }
}

RunSummary summarize(const ExperimentConfig& config, const std::vector<RunRecord>& records,
                     double oracle_cost, double wall_time_s) {
  if (records.empty()) throw std::invalid_argument("run produced no records");
  RunSummary s;
  s.method = method_name(config.method);
  s.plant = plants::plant_name(config.plant.kind);
  s.seed = config.seed;
  s.budget = config.budget;
  s.oracle_cost = oracle_cost;
  s.best_cost = records.back().best_cost;
  s.final_eta = records.back().eta;
  for (const auto& r : records) {
    if (r.cost == s.best_cost && s.best_theta.size() == 0) s.best_theta = r.theta;
    s.penalized += r.penalized ? 1 : 0;
  }
  s.wall_time_s = wall_time_s;
  return s;
}

void write_summary(const std::filesystem::path& file, const RunSummary& s) {
  nlohmann::json j;
  j["method"] = s.method;
  j["plant"] = s.plant;
  j["seed"] = s.seed;
  j["budget"] = s.budget;
  j["oracle_cost"] = s.oracle_cost;
  j["best_cost"] = s.best_cost;
  j["final_eta"] = s.final_eta;
  j["best_theta"] = to_std(s.best_theta);
  j["penalized"] = s.penalized;
  j["wall_time_s"] = s.wall_time_s;
  open_out(file) << j.dump(2) << '\n';
}

RunSummary read_summary(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  const auto j = nlohmann::json::parse(in);
  RunSummary s;
  s.method = j.at("method").get<std::string>();
  s.plant = j.at("plant").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.budget = j.at("budget").get<int>();
  s.oracle_cost = j.at("oracle_cost").get<double>();
  s.best_cost = j.at("best_cost").get<double>();
  s.final_eta = j.at("final_eta").get<double>();
  auto theta = j.at("best_theta").get<std::vector<double>>();
  s.best_theta = Eigen::Map<Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  s.penalized = j.at("penalized").get<int>();
  s.wall_time_s = j.at("wall_time_s").get<double>();
  return s;
}

std::vector<double> read_eta_column(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), "eta");
  if (it == header.end()) throw std::runtime_error(file.string() + ": no eta column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> eta;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= col && std::getline(ss, cell, ','); ++i) {
    }
    eta.push_back(std::stod(cell));
  }
  return eta;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

double cached_oracle(const ExperimentConfig& config, const std::filesystem::path& cache_dir,
                     bool* from_cache, std::uint64_t oracle_seed) {
  const std::string signature =
      oracle_signature(config) + ";oracle_seed=" + std::to_string(oracle_seed);
  const auto file = cache_dir / (sha256_hex(signature) + ".json");
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    const auto j = nlohmann::json::parse(in);
    if (j.at("signature").get<std::string>() == signature) {
      if (from_cache) *from_cache = true;
      return j.at("cost").get<double>();
    }
  }
  oracle::OracleOptions opts;
  opts.seed = oracle_seed;
  const auto res =
      oracle::compute_oracle(config.plant, config.cost, config.x0, config.horizon, opts);
  std::filesystem::create_directories(cache_dir);
  nlohmann::json j;
  j["signature"] = signature;
  j["cost"] = res.cost;
  j["method"] = res.method;
  j["certificate"] = res.gradient_norm;
  j["starts_converged"] = res.starts_converged;
  open_out(file) << j.dump(2) << '\n';
  if (from_cache) *from_cache = false;
  return res.cost;
}

}  // namespace adobo::cli
