#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "recursim/cli.hpp"
#include "recursim/errors.hpp"

namespace fs = std::filesystem;
using namespace recursim;

namespace {

const std::string kScenarios = RECURSIM_SCENARIO_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "recursim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("recursim_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  fs::path dir_;
};

std::string scenario(const std::string& name) { return kScenarios + "/" + name; }

}  // namespace

TEST_F(CliTest, SimulateWritesCsv) {
  const auto r = run_cli({"simulate", "--scenario", scenario("poisson.scn"), "--out",
                          path("a.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("subjects=2000"), std::string::npos);
  const auto csv = slurp(path("a.csv"));
  EXPECT_EQ(csv.rfind("subject_id,event_number,start,stop,status\n", 0), 0u);
  EXPECT_FALSE(fs::exists(path("a.csv.tmp")));
}

TEST_F(CliTest, OutputIsByteIdenticalAcrossRunsAndWorkers) {
  const auto s = scenario("gamma_frailty.scn");
  ASSERT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("a.csv"), "--workers", "1"}).code,
            0);
  ASSERT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("b.csv"), "--workers", "1"}).code,
            0);
  ASSERT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("c.csv"), "--workers", "4"}).code,
            0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("c.csv")));
  ASSERT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("d.csv"), "--seed", "12"}).code,
            0);
  EXPECT_NE(slurp(path("a.csv")), slurp(path("d.csv")));
}

TEST_F(CliTest, EmitFrailtyAddsColumn) {
  ASSERT_EQ(run_cli({"simulate", "--scenario", scenario("gamma_frailty.scn"), "--out",
                     path("f.csv"), "--emit-frailty"})
                .code,
            0);
  const auto csv = slurp(path("f.csv"));
  EXPECT_EQ(csv.rfind("subject_id,event_number,start,stop,status,frailty\n", 0), 0u);
}

TEST_F(CliTest, EngineAndDtOverrides) {
  const auto s = scenario("poisson.scn");
  EXPECT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("t.csv"), "--engine",
                     "thinning"})
                .code,
            0);
  EXPECT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("d.csv"), "--engine",
                     "discrete", "--dt", "0.001"})
                .code,
            0);
  // The discrete engine without a step size is a config error.
  EXPECT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("x.csv"), "--engine",
                     "discrete"})
                .code,
            cli::kExitConfigError);
  EXPECT_EQ(run_cli({"simulate", "--scenario", s, "--out", path("x.csv"), "--engine", "ogata"})
                .code,
            cli::kExitConfigError);
}

TEST_F(CliTest, UnknownKeyIsConfigError) {
  const auto bad = write("bad.scn",
                         "model.baseline.kind = constant\nmodel.baseline.lambda = 1\n"
                         "model.shape = 2\ncensoring.kind = fixed\ncensoring.value = 1\n"
                         "n_subjects = 3\n");
  const auto r = run_cli({"simulate", "--scenario", bad, "--out", path("x.csv")});
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("model.shape"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitConfigError);
  EXPECT_EQ(run_cli({"simulate", "--out", path("x.csv")}).code, cli::kExitConfigError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitConfigError);
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("simulate"), std::string::npos);
}

TEST_F(CliTest, ExplosionExitCode) {
  const auto r = run_cli({"simulate", "--scenario", scenario("explosive.scn"), "--out",
                          path("x.csv")});
  EXPECT_EQ(r.code, cli::kExitExplosion);
  EXPECT_NE(r.err.find("subject 0"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(CliTest, IoErrorExitCode) {
  EXPECT_EQ(run_cli({"simulate", "--scenario", path("missing.scn"), "--out", path("x.csv")}).code,
            cli::kExitIoError);
  const auto r = run_cli({"simulate", "--scenario", scenario("poisson.scn"), "--out",
                          path("no/such/dir/x.csv")});
  EXPECT_EQ(r.code, cli::kExitIoError);
  EXPECT_FALSE(fs::exists(path("no")));
}

TEST_F(CliTest, AtomicWriteLeavesOldFileOnFailure) {
  const auto target = path("keep.txt");
  cli::write_file_atomically(target, "first");
  EXPECT_EQ(slurp(target), "first");
  cli::write_file_atomically(target, "second");
  EXPECT_EQ(slurp(target), "second");
  // Renaming onto a directory fails; nothing is left behind.
  fs::create_directories(path("occupied"));
  EXPECT_THROW(cli::write_file_atomically(path("occupied"), "x"), IoError);
  EXPECT_FALSE(fs::exists(path("occupied.tmp")));
  EXPECT_TRUE(fs::is_directory(path("occupied")));
}

TEST_F(CliTest, ValidatePassesAndWritesSummary) {
  const auto r = run_cli({"validate", "--scenario", scenario("poisson.scn"), "--out",
                          path("summary.txt")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("3 of 3 checks passed"), std::string::npos) << r.out;
  const auto summary = slurp(path("summary.txt"));
  EXPECT_EQ(summary.rfind("count_moments ", 0), 0u) << summary;
  EXPECT_NE(summary.find(" pass\n"), std::string::npos);
}

TEST_F(CliTest, ValidateSummaryFormat) {
  const auto r = run_cli({"validate", "--scenario", scenario("poisson.scn"), "--format",
                          "summary"});
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string name, stat, threshold, verdict, extra;
    fields >> name >> stat >> threshold >> verdict;
    EXPECT_EQ(verdict, "pass") << line;
    EXPECT_FALSE(fields >> extra);
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_EQ(run_cli({"validate", "--scenario", scenario("poisson.scn"), "--format", "xml"}).code,
            cli::kExitConfigError);
}

TEST_F(CliTest, ValidateFailsAgainstWrongOracle) {
  const auto oracle = write("oracle.scn",
                            "model.baseline.kind = constant\nmodel.baseline.lambda = 2.5\n"
                            "censoring.kind = fixed\ncensoring.value = 5\nn_subjects = 1\n");
  const auto r = run_cli({"validate", "--scenario", scenario("poisson.scn"),
                          "--oracle-scenario", oracle});
  EXPECT_EQ(r.code, cli::kExitChecksFailed);
  EXPECT_NE(r.out.find("[FAIL]"), std::string::npos);
}

TEST_F(CliTest, ScenariosListsTaxonomy) {
  const auto r = run_cli({"scenarios"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("(12 cells)"), std::string::npos) << r.out;
  std::istringstream lines(r.out);
  std::string line;
  int labels = 0;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (!line.empty() && line[0] != ' ') ++labels;
  }
  EXPECT_EQ(labels, 12);
}
