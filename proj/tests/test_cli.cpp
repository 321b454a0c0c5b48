#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adobo/cli/commands.hpp"
#include "adobo/cli/config_io.hpp"
#include "adobo/cli/run_store.hpp"

using namespace adobo;
using namespace adobo::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("adobo-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "exp.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunOptions lin1d_run(const fs::path& out, int budget) {
  RunOptions o;
  o.overrides.plant = "lin1d";
  o.overrides.budget = budget;
  o.out = out;
  return o;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(ADOBO_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string text;
  char buf[256];
  while (fgets(buf, sizeof buf, pipe)) text += buf;
  const int status = pclose(pipe);
  if (output) *output = text;
  return WEXITSTATUS(status);
}

}  // namespace

TEST(ConfigParse, MissingKeysKeepPreset) {
  const ExperimentConfig c = parse_config("[experiment]\nplant = lin2d\n");
  const ExperimentConfig d = default_config(plants::PlantKind::Linear2D);
  EXPECT_EQ(to_ini(c), to_ini(d));
}

TEST(ConfigParse, OverridesAndBroadcast) {
  const ExperimentConfig c = parse_config(
      "[experiment]\nplant = dubins\nbudget = 42\nwarp = off\n[bounds]\nlower = -1\nupper = 1\n");
  EXPECT_EQ(c.budget, 42);
  EXPECT_FALSE(c.warp);
  EXPECT_EQ(c.bounds.dim(), 15);
  EXPECT_EQ(c.bounds.lower.maxCoeff(), -1.0);
}

TEST(ConfigParse, InfiniteSoftBounds) {
  const ExperimentConfig c = parse_config(
      "[experiment]\nplant = lin2d\n[cost]\nlower = 0.1, -inf\nupper = inf, 3\nweight = 5\n");
  ASSERT_TRUE(c.cost.soft_bounds);
  EXPECT_TRUE(std::isinf(c.cost.soft_bounds->lower[1]));
  EXPECT_EQ(c.cost.soft_bounds->upper[1], 3.0);
}

TEST(ConfigParse, SyntaxErrorNamesLine) {
  const std::string e = config_error("[experiment]\nplant = lin1d\nthis line is broken\n");
  EXPECT_NE(e.find("exp.ini:3"), std::string::npos) << e;
}

TEST(ConfigParse, FieldErrorsNameSectionAndKey) {
  EXPECT_NE(config_error("[experiment]\nbudget = many\n").find("[experiment] budget"),
            std::string::npos);
  EXPECT_NE(config_error("[experiment]\nplant = lin1d\n[initial]\nx0 = 1, 2\n").find("[initial] x0"),
            std::string::npos);
  EXPECT_NE(config_error("[experiment]\nplant = rocket\n").find("unknown plant"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nmethod = pso\n").find("unknown method"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nwarp = maybe\n").find("on|off"), std::string::npos);
}

TEST(ConfigParse, SemanticErrorsAreConfigErrors) {
  EXPECT_FALSE(config_error("[experiment]\nplant = lin2d\ncontroller = lqr\n").empty());
  EXPECT_FALSE(config_error("[experiment]\nbudget = 0\n").empty());
}

TEST(ConfigParse, RoundTripThroughIni) {
  for (const auto kind : {plants::PlantKind::Dubins, plants::PlantKind::Linear1D,
                          plants::PlantKind::Linear2D, plants::PlantKind::CartPole}) {
    ExperimentConfig c = default_config(kind);
    c.seed = 99;
    c.oracle_cost = 1.0 / 3.0;
    c.baseline.alpha = 0.4;
    const ExperimentConfig back = parse_config(to_ini(c));
    EXPECT_EQ(to_ini(back), to_ini(c));
    EXPECT_EQ(*back.oracle_cost, 1.0 / 3.0);
  }
}

TEST(ConfigParse, ShippedConfigsLoad) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(ADOBO_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 4);
}

TEST(OracleSignature, DependsOnlyOnTask) {
  ExperimentConfig a = default_config(plants::PlantKind::Dubins);
  ExperimentConfig b = a;
  b.seed = 5;
  b.budget = 7;
  b.method = Method::KLearning;
  EXPECT_EQ(oracle_signature(a), oracle_signature(b));
  b.x0[0] += 1e-12;
  EXPECT_NE(oracle_signature(a), oracle_signature(b));
}

TEST(Seeds, Forms) {
  EXPECT_EQ(parse_seeds("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seeds("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seeds("9,2,5"), (std::vector<std::uint64_t>{9, 2, 5}));
  EXPECT_THROW(parse_seeds("5..1"), ConfigError);
  EXPECT_THROW(parse_seeds("a,b"), ConfigError);
  EXPECT_THROW(parse_seeds("-1"), ConfigError);
}

TEST(Stats, Quantiles) {
  EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_EQ(quantile({7}, 0.75), 7.0);
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(TempDir, OracleCacheServesRepeatCalls) {
  const ExperimentConfig c = default_config(plants::PlantKind::Linear1D);
  bool cached = true;
  const double first = cached_oracle(c, dir_, &cached);
  EXPECT_FALSE(cached);
  EXPECT_EQ(std::floor(first * 100) / 100, 1.61);
  const double second = cached_oracle(c, dir_, &cached);
  EXPECT_TRUE(cached);
  EXPECT_EQ(first, second);
}

TEST_F(TempDir, RunWritesArtifactsDeterministically) {
  std::ostringstream log;
  RunOptions o = lin1d_run(dir_ / "a", 6);
  o.seeds = {7};
  const auto dirs = run_command(o, log);
  ASSERT_EQ(dirs.size(), 1u);
  EXPECT_EQ(dirs[0].filename(), "adobo-lin1d-seed7");
  for (const char* f : {"records.csv", "gp_dataset.csv", "summary.json", "config.ini"}) {
    EXPECT_TRUE(fs::exists(dirs[0] / f)) << f;
  }
  const std::string records = slurp(dirs[0] / "records.csv");
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 7);
  EXPECT_EQ(records.substr(0, records.find('\n')), "method,n,theta_1,theta_2,J,y,J_best,eta");

  o.out = dir_ / "b";
  const auto again = run_command(o, log);
  EXPECT_EQ(slurp(again[0] / "records.csv"), records);

  RunOptions replay;
  replay.overrides.config_path = (dirs[0] / "config.ini").string();
  replay.out = dir_ / "c";
  const auto replayed = run_command(replay, log);
  EXPECT_EQ(slurp(replayed[0] / "records.csv"), records);
}

TEST_F(TempDir, EtaColumnRecomputableFromCache) {
  std::ostringstream log;
  const auto dirs = run_command(lin1d_run(dir_, 5), log);
  const RunSummary s = read_summary(dirs[0] / "summary.json");
  const double j_star = cached_oracle(default_config(plants::PlantKind::Linear1D),
                                      dir_ / "oracle-cache");
  EXPECT_EQ(s.oracle_cost, j_star);
  std::ifstream in(dirs[0] / "records.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const double best = std::stod(cells[cells.size() - 2]);
    EXPECT_NEAR(std::stod(cells.back()), 100.0 * (best - j_star) / j_star, 1e-9);
  }
}

TEST_F(TempDir, ParallelSeedsMatchSerialRuns) {
  std::ostringstream log;
  RunOptions o = lin1d_run(dir_ / "par", 4);
  o.seeds = {1, 2, 3};
  o.jobs = 3;
  const auto par = run_command(o, log);
  o.out = dir_ / "ser";
  o.jobs = 1;
  const auto ser = run_command(o, log);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(slurp(par[i] / "records.csv"), slurp(ser[i] / "records.csv"));
  }
}

TEST_F(TempDir, Linear1DConvergesThroughCli) {
  std::ostringstream log;
  const auto dirs = run_command(lin1d_run(dir_, 100), log);
  EXPECT_LE(read_summary(dirs[0] / "summary.json").final_eta, 1.0);
}

TEST_F(TempDir, CompareTableAndErrors) {
  std::ostringstream log, table;
  RunOptions o = lin1d_run(dir_, 6);
  o.seeds = {1, 2};
  auto dirs = run_command(o, log);
  o.overrides.method = "klearn";
  const auto k = run_command(o, log);
  dirs.insert(dirs.end(), k.begin(), k.end());

  CompareOptions cmp{dirs, {3, 6}, dir_ / "curves.csv"};
  compare_command(cmp, table);
  EXPECT_NE(table.str().find("adobo"), std::string::npos);
  EXPECT_NE(table.str().find("klearn"), std::string::npos);
  const std::string curves = slurp(dir_ / "curves.csv");
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 1 + 2 * 6);

  std::ostringstream single;
  compare_command({{dirs[0]}, {6}, {}}, single);
  const std::string one = single.str();
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 3);

  EXPECT_THROW(compare_command({dirs, {7}, {}}, table), ConfigError);

  RunOptions other;
  other.overrides.plant = "lin2d";
  other.overrides.budget = 2;
  other.out = dir_;
  const auto l2 = run_command(other, log);
  EXPECT_THROW(compare_command({{dirs[0], l2[0]}, {1}, {}}, table), ConfigError);
}

TEST_F(TempDir, BinaryExitCodes) {
  std::string out;
  EXPECT_EQ(run_cli("oracle --plant lin1d --out " + dir_.string(), &out), 0);
  EXPECT_NE(out.find("1.618"), std::string::npos) << out;
  EXPECT_EQ(run_cli("oracle --plant lin1d --out " + dir_.string(), &out), 0);
  EXPECT_NE(out.find("cached"), std::string::npos) << out;

  const fs::path bad = dir_ / "bad.ini";
  std::ofstream(bad) << "[experiment]\nplant = lin1d\nbudget = -3\n";
  EXPECT_EQ(run_cli("run --config " + bad.string() + " --out " + dir_.string(), &out), 2);
  EXPECT_NE(out.find("[experiment] budget"), std::string::npos) << out;

  EXPECT_EQ(run_cli("run --plant lin1d --seeds 3..1", &out), 2);
  EXPECT_EQ(run_cli("frobnicate", &out), 2);
  EXPECT_EQ(run_cli("compare " + dir_.string() + " --at 1", &out), 3);
}

TEST_F(TempDir, OracleSeedsAgreeOnDubins) {
  std::ostringstream log;
  Overrides o;
  o.plant = "dubins";
  const double a = oracle_command(o, dir_, log, 0);
  const double b = oracle_command(o, dir_, log, 11);
  EXPECT_NEAR(a, b, 0.01 * a);
}
