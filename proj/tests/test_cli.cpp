#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dcp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout captured.
  int run(std::initializer_list<std::string> args) {
    std::vector<std::string> store{"dcp-cli"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : store) argv.push_back(s.data());
    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    const int code = dcp::cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    out_ = captured.str();
    return code;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
  }

  fs::path dir_;
  std::string out_;
};

}  // namespace

TEST_F(CliTest, EnumerateDeltaKernelGivesFiveEqualPartitions) {
  write("three.csv", "x\n0\n1\n2\n");
  ASSERT_EQ(run({"enumerate", "--input", path("three.csv"), "--kernel", "delta"}), 0);
  const auto j = json::parse(out_);
  ASSERT_EQ(j["partitions"].size(), 5u);
  for (const auto& p : j["partitions"]) EXPECT_NEAR(p["probability"].get<double>(), 0.2, 1e-12);
}

TEST_F(CliTest, FitThenEvalPipeline) {
  ASSERT_EQ(run({"synth", "--scenario", "multimodal", "--seed", "3", "--out", path("d.csv"), "--truth",
                 path("t.csv")}),
            0);
  ASSERT_EQ(run({"fit", "--input", path("d.csv"), "--truth", path("t.csv"), "--out", path("run"),
                 "--sweeps", "30", "--burn-in", "10", "--thin", "4"}),
            0);
  const auto summary = json::parse(slurp(path("run/summary.json")));
  EXPECT_TRUE(summary.contains("mean_ari"));
  EXPECT_TRUE(summary.contains("mean_nmi"));
  EXPECT_TRUE(summary.contains("cluster_count_histogram"));
  EXPECT_EQ(summary["num_samples"].get<int>(), 5);

  const auto manifest = json::parse(slurp(path("run/manifest.json")));
  EXPECT_EQ(manifest["sampler"]["n_sweeps"].get<int>(), 30);
  EXPECT_EQ(manifest["sampler"]["seed"].get<int>(), 1);
  EXPECT_EQ(manifest["version"].get<std::string>(), "0.1.0");

  std::istringstream trace(slurp(path("run/trace.csv")));
  std::string line;
  std::size_t rows = 0;
  std::getline(trace, line);
  while (std::getline(trace, line)) ++rows;
  EXPECT_EQ(rows, 5u);

  ASSERT_EQ(run({"eval", path("t.csv"), path("run/modal_partition.csv"), "--test-only"}), 0);
  const auto ev = json::parse(out_);
  EXPECT_TRUE(ev.contains("ari"));
  EXPECT_TRUE(ev.contains("nmi"));
}

TEST_F(CliTest, FitIsDeterministic) {
  ASSERT_EQ(run({"synth", "--scenario", "overlap", "--out", path("d.csv"), "--truth", path("t.csv")}),
            0);
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(run({"fit", "--input", path("d.csv"), "--out", path(sub), "--sweeps", "15",
                   "--burn-in", "5", "--seed", "42"}),
              0);
  EXPECT_EQ(slurp(path("a/trace.csv")), slurp(path("b/trace.csv")));
  EXPECT_FALSE(slurp(path("a/trace.csv")).empty());
}

TEST_F(CliTest, DuplicateRowsAreExpandedInOutputs) {
  write("dup.csv", "x,y\n0,0\n5,5\n0,0\n");
  ASSERT_EQ(run({"fit", "--input", path("dup.csv"), "--out", path("run"), "--sweeps", "3",
                 "--burn-in", "0"}),
            0);
  std::istringstream trace(slurp(path("run/trace.csv")));
  std::string line;
  std::getline(trace, line);
  std::getline(trace, line);
  // assignment field has one id per original row
  const auto first = line.find(',');
  const auto second = line.find(',', first + 1);
  const std::string assignment = line.substr(first + 1, second - first - 1);
  EXPECT_EQ(std::count(assignment.begin(), assignment.end(), '|'), 2);
}

TEST_F(CliTest, BaselineKMeansScoresAgainstTruth) {
  ASSERT_EQ(run({"synth", "--scenario", "blobs", "--out", path("d.csv"), "--truth", path("t.csv")}),
            0);
  ASSERT_EQ(run({"baseline-kmeans", "--input", path("d.csv"), "--k", "3", "--truth", path("t.csv"),
                 "--all-points", "--out", path("km.csv")}),
            0);
  const auto j = json::parse(out_);
  EXPECT_NEAR(j["ari"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(fs::exists(path("km.csv")));
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"fit"}), 2);
  EXPECT_EQ(run({"synth", "--bogus"}), 2);
  EXPECT_EQ(run({"synth", "--scenario", "moons"}), 2);
  write("bad.csv", "x\n1\nfoo\n");
  EXPECT_EQ(run({"fit", "--input", path("bad.csv"), "--out", path("r")}), 2);
  write("ok.csv", "x,y\n1,2\n3,4\n");
  EXPECT_EQ(run({"fit", "--input", path("ok.csv"), "--out", path("r"), "--lengthscale", "1,2,3"}),
            2);
  EXPECT_EQ(run({"fit", "--input", path("ok.csv"), "--out", path("r"), "--thin", "0"}), 2);
}

TEST_F(CliTest, EnumerateRefusesLargeInputs) {
  std::string csv = "x\n";
  for (int i = 0; i < 13; ++i) csv += std::to_string(i) + "\n";
  write("big.csv", csv);
  EXPECT_NE(run({"enumerate", "--input", path("big.csv")}), 0);
}
