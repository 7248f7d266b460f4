#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using neurodiff::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "neurodiff");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("neurodiff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({"solve", "nonsense"}).code, 2);
  EXPECT_EQ(invoke({"solve", "decay", "--bogus-flag"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"solve", "decay-bundle"}).code, 2);
  EXPECT_EQ(invoke({"bundle", "decay"}).code, 2);
  EXPECT_EQ(invoke({"solve", "decay", "--hidden", "3,x"}).code, 2);
  EXPECT_EQ(invoke({"solve", "heat", "--dim", "5"}).code, 2);
  EXPECT_EQ(invoke({"solve", "decay", "--precision", "f16"}).code, 2);
  const Result r = invoke({"solve", "nonsense"});
  EXPECT_NE(r.err.find("unknown preset"), std::string::npos) << r.err;
}

TEST_F(CliTest, ZeroEpochSolveWritesArtifacts) {
  const Result r = invoke({"solve", "decay", "--epochs", "0", "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.csv", "solution.csv", "checkpoint.ndstate", "run-manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const auto sol = read_csv(dir_ / "solution.csv");
  ASSERT_GE(sol.size(), 2u);
  EXPECT_EQ(sol[0][0], "t");
  EXPECT_EQ(sol[0][1], "u");
  EXPECT_EQ(std::stod(sol[1][0]), 0.0);
  EXPECT_EQ(std::stod(sol[1][1]), 1.0);
  EXPECT_EQ(read_csv(dir_ / "metrics.csv").size(), 1u);  // header only
}

TEST_F(CliTest, ManifestRoundTripReproducesRun) {
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(invoke({"solve", "decay", "--epochs", "15", "--batch-size", "32", "--seed", "4", "--out", a.string()}).code, 0);
  ASSERT_EQ(invoke({"solve", "--manifest", (a / "run-manifest.json").string(), "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "solution.csv"), slurp(b / "solution.csv"));
  EXPECT_EQ(slurp(a / "checkpoint.ndstate"), slurp(b / "checkpoint.ndstate"));
  const auto j = nlohmann::json::parse(slurp(a / "run-manifest.json"));
  EXPECT_EQ(j["epochs"], 15);
  EXPECT_EQ(j["batch_size"], 32);
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(j["preset"], "decay");
  // a manifest for another command is refused
  EXPECT_EQ(invoke({"bundle", "--manifest", (a / "run-manifest.json").string()}).code, 2);
}

TEST_F(CliTest, SeedFromEnvironment) {
  const fs::path a = dir_ / "a";
  setenv("NEURODIFF_SEED", "77", 1);
  const Result r = invoke({"solve", "decay", "--epochs", "0", "--out", a.string()});
  unsetenv("NEURODIFF_SEED");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(a / "run-manifest.json"))["seed"], 77);
}

TEST_F(CliTest, TrainingAbortExitsOne) {
  const Result r = invoke({"solve", "decay", "--epochs", "50", "--lr", "1e300", "--out", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("non-finite"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvertWithZeroStepsReturnsInit) {
  ASSERT_EQ(invoke({"bundle", "decay-bundle", "--epochs", "10", "--batch-size", "32", "--out", dir_.string()}).code, 0);
  {
    std::ofstream data(dir_ / "obs.csv");
    data << "t,u\n";
    for (int i = 0; i < 20; ++i) data << 0.1 * i << ',' << 0.7 * std::exp(-1.3 * 0.1 * i) << '\n';
  }
  const Result r = invoke({"invert", "decay-bundle", "--data", (dir_ / "obs.csv").string(), "--checkpoint",
                           (dir_ / "checkpoint.ndstate").string(), "--init", "u0=1.1,lambda=0.9", "--steps", "0",
                           "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "theta.json"));
  EXPECT_EQ(j["theta"]["u0"].get<double>(), 1.1);
  EXPECT_EQ(j["theta"]["lambda"].get<double>(), 0.9);
  EXPECT_EQ(j["steps"], 0);
  EXPECT_EQ(j["observations"], 20);
}

TEST_F(CliTest, InvertRejectsBadInputs) {
  ASSERT_EQ(invoke({"bundle", "decay-bundle", "--epochs", "1", "--batch-size", "16", "--out", dir_.string()}).code, 0);
  const std::string ckpt = (dir_ / "checkpoint.ndstate").string();
  {
    std::ofstream data(dir_ / "three.csv");
    data << "0.0,1.0,2.0\n0.5,0.6,0.1\n";
  }
  EXPECT_EQ(invoke({"invert", "decay-bundle", "--data", (dir_ / "three.csv").string(), "--checkpoint", ckpt}).code, 2);
  {
    std::ofstream data(dir_ / "ok.csv");
    data << "0.0,1.0\n0.5,0.6\n";
  }
  const std::string ok = (dir_ / "ok.csv").string();
  EXPECT_EQ(invoke({"invert", "decay-bundle", "--data", ok, "--checkpoint", ckpt, "--init", "mu=1"}).code, 2);
  EXPECT_EQ(invoke({"invert", "decay-bundle", "--data", ok, "--checkpoint", ckpt, "--init", "u0=9"}).code, 2);
  EXPECT_EQ(invoke({"invert", "decay", "--data", ok, "--checkpoint", ckpt}).code, 2);
  EXPECT_EQ(invoke({"invert", "decay-bundle", "--data", ok}).code, 2);
}

TEST_F(CliTest, BenchOperatorsTable) {
  const Result r = invoke({"bench-operators", "--sizes", "64", "--repeats", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("system,operator,naive_ms_mean,naive_ms_std,fused_ms_mean,fused_ms_std,speedup", 0), 0u);
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  }
  const auto check_col = std::find(cols.begin(), cols.end(), "check") - cols.begin();
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++rows;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    ASSERT_EQ(f.size(), cols.size());
    EXPECT_EQ(std::stod(f[3]), 0.0);  // naive std with one repeat
    EXPECT_EQ(std::stod(f[5]), 0.0);
    ASSERT_LT(static_cast<std::size_t>(check_col), f.size());
    EXPECT_EQ(f[check_col], "ok");
  }
  EXPECT_EQ(rows, 15);
  EXPECT_EQ(invoke({"bench-operators", "--sizes", "0"}).code, 2);
}
