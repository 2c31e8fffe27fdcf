#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::fixture;
using genaibench::testing::read_file;
using genaibench::testing::scratch_dir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, {out, err, false});
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, ValidateGoodAndBad) {
  EXPECT_EQ(invoke({"validate", fixture("content_creation.yaml").string()}).code, cli::kOk);
  const auto bad = invoke({"validate", fixture("dangling.yaml").string()});
  EXPECT_EQ(bad.code, cli::kValidation);
  EXPECT_NE(bad.out.find("DanglingReference"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({"bogus"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"validate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", fixture("content_creation.yaml").string(), "--mode", "warp"}).code, cli::kUsage);
  const auto help = invoke({"--help"});
  EXPECT_EQ(help.code, cli::kOk);
  EXPECT_NE(help.out.find("validate"), std::string::npos);
}

TEST(Cli, GraphListsNodesAndEdges) {
  const auto g = invoke({"graph", fixture("content_creation.yaml").string()});
  ASSERT_EQ(g.code, cli::kOk);
  EXPECT_NE(g.out.find("exec/analysis (background)"), std::string::npos);
  EXPECT_NE(g.out.find(" -> "), std::string::npos);
  const auto dot = invoke({"graph", "--dot", fixture("content_creation.yaml").string()});
  EXPECT_EQ(dot.out.rfind("digraph", 0), 0u);
}

TEST(Cli, SimRunThenReport) {
  const auto dir = scratch_dir("cli-run");
  const auto r = invoke({"run", fixture("content_creation.yaml").string(), "--mode", "sim", "--seed", "5", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("workflow e2e"), std::string::npos);
  for (const auto* f : {"trace.json", "requests.json", "samples.csv", "report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto original = read_file(dir / "report.json");
  const auto again = scratch_dir("cli-report");
  ASSERT_EQ(invoke({"report", dir.string(), "--out", again.string()}).code, cli::kOk);
  EXPECT_EQ(read_file(again / "report.json"), original);
  const auto j = nlohmann::json::parse(original);
  EXPECT_EQ(j["metadata"]["seed"], 5);
  EXPECT_EQ(j["metadata"]["mode"], "simulated");
}

TEST(Cli, LiveRunWithoutEndpointsIsAValidationError) {
  const auto r = invoke({"run", fixture("content_creation.yaml").string(), "--mode", "live"});
  EXPECT_EQ(r.code, cli::kValidation);
  EXPECT_NE(r.out.find("MissingEndpoint"), std::string::npos);
}

TEST(Cli, SimKernelTrace) {
  const auto r = invoke({"sim", fixture("kernels.jsonl").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["policy"], "greedy");
  EXPECT_EQ(j["sm_count"], 72);
  // the small kernel waits behind the full-device one
  EXPECT_EQ(j["app_completion_ns"]["small"], 1'010'000'000);

  const auto p = invoke({"sim", fixture("kernels.jsonl").string(), "--policy", "partition"});
  const auto pj = nlohmann::json::parse(p.out);
  EXPECT_EQ(pj["app_completion_ns"]["small"], 11'000'000);

  const auto dir = scratch_dir("cli-sim");
  const auto w = invoke({"sim", fixture("kernels.jsonl").string(), "--out", dir.string()});
  ASSERT_EQ(w.code, cli::kOk);
  EXPECT_TRUE(std::filesystem::exists(dir / "sim_result.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "samples.csv"));
  EXPECT_NE(w.out.find("makespan"), std::string::npos);
}

TEST(Cli, MissingFileIsUsageOrRuntime) {
  EXPECT_NE(invoke({"validate", "/nonexistent.yaml"}).code, cli::kOk);
  EXPECT_EQ(invoke({"sim", "/nonexistent.jsonl"}).code, cli::kUsage);
}
