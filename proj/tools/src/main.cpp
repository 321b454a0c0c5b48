#include <CLI11.hpp>

#include <iostream>

#include "adobo/cli/commands.hpp"
#include "adobo/cli/config_io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void add_overrides(CLI::App* cmd, adobo::cli::Overrides& o, std::string& warp) {
  cmd->add_option("--config", o.config_path, "INI experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--plant", o.plant, "dubins|lin1d|lin2d|cartpole");
  cmd->add_option("--method", o.method, "adobo|qr|klearn|ls|useq");
  cmd->add_option("--budget", o.budget, "number of closed-loop evaluations");
  cmd->add_option("--warp", warp, "log-warp the costs (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of linear dynamics models for control"};
  app.require_subcommand(1);

  adobo::cli::RunOptions run;
  std::string run_warp, seeds;
  auto* run_cmd = app.add_subcommand("run", "run one method for one or more seeds");
  add_overrides(run_cmd, run.overrides, run_warp);
  run_cmd->add_option("--seeds,--seed", seeds, "seed, range a..b or list a,b,c");
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_option("--jobs", run.jobs, "parallel runs (default: hardware threads)");

  adobo::cli::Overrides oracle;
  std::string oracle_warp;
  std::filesystem::path oracle_out = "runs";
  std::uint64_t oracle_seed = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "compute or look up the optimal cost J*");
  add_overrides(oracle_cmd, oracle, oracle_warp);
  oracle_cmd->add_option("--out", oracle_out, "directory holding oracle-cache/")
      ->capture_default_str();
  oracle_cmd->add_option("--oracle-seed", oracle_seed, "seed of the random multistarts")
      ->capture_default_str();

  adobo::cli::CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "summarize eta across run directories");
  compare_cmd->add_option("runs", compare.run_dirs, "run directories")
      ->required()
      ->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--at", compare.checkpoints, "checkpoint iterations")
      ->delimiter(',')
      ->required();
  compare_cmd->add_option("--curves", compare.curves_csv, "write median/IQR curves to CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  auto warp_of = [](const std::string& w) -> std::optional<bool> {
    if (w.empty()) return std::nullopt;
    return w == "on";
  };

  try {
    if (*run_cmd) {
      run.overrides.warp = warp_of(run_warp);
      if (!seeds.empty()) run.seeds = adobo::cli::parse_seeds(seeds);
      adobo::cli::run_command(run, std::cout);
    } else if (*oracle_cmd) {
      oracle.warp = warp_of(oracle_warp);
      adobo::cli::oracle_command(oracle, oracle_out, std::cout, oracle_seed);
    } else if (*compare_cmd) {
      adobo::cli::compare_command(compare, std::cout);
    }
  } catch (const adobo::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
