#include <gtest/gtest.h>

#include <random>

#include "genaibench/engine.hpp"
#include "genaibench/error.hpp"
#include "genaibench/metrics.hpp"
#include "genaibench/trace.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::node;
using genaibench::testing::read_file;
using genaibench::testing::scratch_dir;
using genaibench::testing::synthetic_task;

namespace {

RunTrace sample_trace() {
  BenchmarkSpec spec;
  spec.mode = Mode::simulated;
  spec.seed = 17;
  auto chat = synthetic_task("chat", 2, 1'000'000);
  chat.app_kind = AppKind::chatbot;
  chat.model = "m";
  chat.profile = default_profile(AppKind::chatbot);
  chat.profile.units = 4;
  chat.slo = SloLatencyPair{1.0, 0.25};
  auto art = synthetic_task("art", 1, 1'000'000);
  art.app_kind = AppKind::imagegen;
  art.profile = default_profile(AppKind::imagegen);
  art.slo = SloStepTime{1.0};
  spec.tasks = {{"chat", chat}, {"art", art}};
  spec.workflow = {node("c", "chat"), node("a", "art", {"c"})};
  RunOptions o;
  o.host = "h";
  return run(spec, o);
}

}  // namespace

TEST(Trace, RoundTripPreservesEverything) {
  auto t = sample_trace();
  t.gaps.push_back({0.25, "simgpu"});
  t.notes.push_back("a note");
  const auto dir = scratch_dir("trace-rt");
  write_trace(t, dir);
  const auto back = read_trace(dir);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.spec, t.spec);
  EXPECT_EQ(back.nodes.size(), t.nodes.size());
  EXPECT_EQ(back.events, t.events);
  EXPECT_EQ(back.requests, t.requests);
  EXPECT_EQ(back.samples, t.samples);
  EXPECT_EQ(back.gaps, t.gaps);
  EXPECT_EQ(back.notes, t.notes);
  EXPECT_EQ(trace_to_json(back), trace_to_json(t));
}

TEST(Trace, ReportFromFilesEqualsOriginal) {
  const auto t = sample_trace();
  const auto dir = scratch_dir("trace-report");
  write_trace(t, dir);
  EXPECT_EQ(report_to_json(build_report(read_trace(dir))), report_to_json(build_report(t)));
}

TEST(Trace, Queries) {
  const auto t = sample_trace();
  EXPECT_EQ(t.outcome("exec/c"), Phase::finished);
  EXPECT_FALSE(t.outcome("exec/nope"));
  ASSERT_TRUE(t.time_of("exec/a", Phase::started));
  EXPECT_GE(*t.time_of("exec/a", Phase::started), *t.time_of("exec/c", Phase::finished));
  const auto evs = t.events_of("exec/c");
  ASSERT_FALSE(evs.empty());
  EXPECT_EQ(evs.front()->phase, Phase::dispatched);
  for (std::size_t i = 1; i < t.events.size(); ++i) EXPECT_LE(t.events[i - 1].t, t.events[i].t);
}

TEST(Trace, SamplesCsvInterleavesGaps) {
  const auto csv = samples_to_csv({{0.0, MetricKind::smact, 50, "dcgm"}, {0.2, MetricKind::smact, 60, "dcgm"}},
                                  {{0.1, "dcgm"}});
  EXPECT_EQ(csv, "t,kind,value,source\n0,smact,50,dcgm\n0.1,gap,,dcgm\n0.2,smact,60,dcgm\n");
}

TEST(Trace, MalformedInputs) {
  const auto dir = scratch_dir("trace-bad");
  EXPECT_THROW(read_trace(dir), ParseError);
  write_trace(sample_trace(), dir);
  {
    std::ofstream(dir / "trace.json") << "{not json";
  }
  EXPECT_THROW(read_trace(dir), ParseError);
  write_trace(sample_trace(), dir);
  {
    std::ofstream(dir / "samples.csv") << "bogus header\n";
  }
  EXPECT_THROW(read_trace(dir), ParseError);
}

TEST(Trace, PhaseNames) {
  for (auto p : {Phase::dispatched, Phase::started, Phase::finished, Phase::failed, Phase::cancelled}) {
    EXPECT_EQ(parse_phase(to_string(p)), p);
  }
  EXPECT_FALSE(parse_phase("exploded"));
}
