#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <thread>

#include "genaibench/engine.hpp"
#include "genaibench/error.hpp"
#include "genaibench/metrics.hpp"
#include "genaibench/simgpu.hpp"
#include "genaibench/trace.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::fixture;
using genaibench::testing::node;
using genaibench::testing::read_file;
using genaibench::testing::synthetic_task;

namespace {

RunOptions quiet() {
  RunOptions o;
  o.collectors = [](double) { return std::vector<std::unique_ptr<Collector>>{}; };
  o.host = "test-host";
  return o;
}

BenchmarkSpec sim_spec() {
  BenchmarkSpec s;
  s.mode = Mode::simulated;
  s.seed = 1;
  return s;
}

BenchmarkSpec live_spec() {
  BenchmarkSpec s;
  s.mode = Mode::live;
  s.sample_interval = 0.05;
  return s;
}

std::size_t idx(const Dag& d, const std::string& id) { return *d.index_of(id); }

std::vector<std::string> ids(const Dag& d, const std::vector<std::size_t>& is) {
  std::vector<std::string> out;
  for (auto i : is) out.push_back(d.node(i).id);
  return out;
}

/// Every edge's target starts no earlier than its source reaches a terminal
/// phase, and every started node ends.
void expect_dependency_safe(const RunTrace& t) {
  std::map<std::string, Nanos> started, ended;
  for (const auto& e : t.events) {
    if (e.phase == Phase::started) started.emplace(e.node, e.t);
    if (is_terminal(e.phase)) ended.emplace(e.node, e.t);
  }
  const auto full = build_dag(t.spec);
  for (const auto& [from, to] : full.edges()) {
    if (!started.count(to)) continue;
    ASSERT_TRUE(ended.count(from)) << from << " -> " << to;
    EXPECT_LE(ended.at(from), started.at(to)) << from << " -> " << to;
    if (full.node(to).kind != NodeKind::cleanup) {
      EXPECT_EQ(t.outcome(from), Phase::finished) << from;
    }
  }
  for (const auto& [n, at] : started) EXPECT_TRUE(ended.count(n)) << n;
}

class ScriptedAdapter : public Adapter {
 public:
  explicit ScriptedAdapter(std::function<void(const TaskDefinition&)> on_exec, bool fail_setup = false)
      : on_exec_(std::move(on_exec)), fail_setup_(fail_setup) {}

  std::unique_ptr<ServerHandle> setup(const TaskDefinition& t, const Placement&) override {
    if (fail_setup_) throw SetupFailure("cannot load " + t.name);
    return std::make_unique<ServerHandle>();
  }
  std::vector<RequestRecord> execute(ServerHandle&, const TaskDefinition& task, const RequestContext& ctx) override {
    on_exec_(task);
    std::vector<RequestRecord> out;
    for (int i = 0; i < task.num_requests; ++i) out.push_back(synthetic_execute(task.profile, std::to_string(i), task, ctx));
    return out;
  }
  void cleanup(ServerHandle&) override { ++cleanups; }

  static inline std::atomic<int> cleanups{0};

 private:
  std::function<void(const TaskDefinition&)> on_exec_;
  bool fail_setup_;
};

RunOptions with_adapter(std::function<void(const TaskDefinition&)> on_exec, bool fail_setup = false) {
  auto o = quiet();
  o.adapters.add(AppKind::synthetic, [=] { return std::make_shared<ScriptedAdapter>(on_exec, fail_setup); });
  return o;
}

}  // namespace

// ------------------------------------------------------------ WorkflowState

TEST(WorkflowState, FailureCancelsDependentsButNotCleanup) {
  BenchmarkSpec spec;
  spec.tasks["t"] = synthetic_task("t", 1, 1);
  spec.workflow = {node("a", "t"), node("b", "t", {"a"}), node("c", "t")};
  const auto dag = build_dag(spec);
  WorkflowState st(dag, FailurePolicy::cancel_dependents);
  for (const auto* n : {"setup/a", "setup/b", "setup/c"}) st.mark_finished(idx(dag, n));
  std::vector<std::size_t> to_stop;
  const auto cancelled = st.mark_failed(idx(dag, "exec/a"), to_stop);
  EXPECT_EQ(ids(dag, cancelled), (std::vector<std::string>{"exec/b"}));
  EXPECT_TRUE(to_stop.empty());
  const auto ready = ids(dag, st.ready());
  EXPECT_NE(std::find(ready.begin(), ready.end(), "cleanup/a"), ready.end());
  EXPECT_NE(std::find(ready.begin(), ready.end(), "cleanup/b"), ready.end());
  EXPECT_NE(std::find(ready.begin(), ready.end(), "exec/c"), ready.end());
  EXPECT_TRUE(st.any_failed());
  EXPECT_FALSE(st.workflow_complete());
}

TEST(WorkflowState, FailedSetupCancelsItsChain) {
  BenchmarkSpec spec;
  spec.tasks["t"] = synthetic_task("t", 1, 1);
  spec.workflow = {node("a", "t"), node("b", "t", {"a"})};
  const auto dag = build_dag(spec);
  WorkflowState st(dag, FailurePolicy::cancel_dependents);
  std::vector<std::size_t> to_stop;
  const auto cancelled = st.mark_failed(idx(dag, "setup/a"), to_stop);
  EXPECT_EQ(ids(dag, cancelled),
            (std::vector<std::string>{"exec/a", "cleanup/a", "setup/b", "exec/b", "cleanup/b"}));
  EXPECT_TRUE(st.all_terminal());
}

TEST(WorkflowState, AbortRunStopsEverything) {
  BenchmarkSpec spec;
  spec.tasks["t"] = synthetic_task("t", 1, 1);
  spec.workflow = {node("a", "t"), node("b", "t")};
  const auto dag = build_dag(spec);
  WorkflowState st(dag, FailurePolicy::abort_run);
  st.mark_finished(idx(dag, "setup/a"));
  st.mark_finished(idx(dag, "setup/b"));
  st.mark_running(idx(dag, "exec/b"));
  std::vector<std::size_t> to_stop;
  const auto cancelled = st.mark_failed(idx(dag, "exec/a"), to_stop);
  EXPECT_TRUE(cancelled.empty());
  EXPECT_EQ(ids(dag, to_stop), (std::vector<std::string>{"exec/b"}));
  EXPECT_EQ(ids(dag, st.ready()), (std::vector<std::string>{"cleanup/a"}));
}

TEST(WorkflowState, BackgroundAndConcurrencyQueries) {
  BenchmarkSpec spec;
  spec.tasks["t"] = synthetic_task("t", 1, 1);
  spec.workflow = {node("a", "t"), node("bg", "t", {}, true)};
  const auto dag = build_dag(spec);
  WorkflowState st(dag, FailurePolicy::cancel_dependents);
  st.mark_running(idx(dag, "exec/bg"));
  EXPECT_EQ(st.in_flight_execs(), 1u);
  st.mark_finished(idx(dag, "exec/a"));
  EXPECT_TRUE(st.workflow_complete());
  EXPECT_EQ(ids(dag, st.unfinished_background()), (std::vector<std::string>{"exec/bg"}));
}

// --------------------------------------------------------------- simulated

TEST(SimRun, TwoKernelsRunSerially) {
  auto spec = sim_spec();
  auto t = synthetic_task("t", 1, 1'000'000'000, 50);
  t.profile.unit = {{1'000'000'000, 50.0, 2}};
  spec.tasks["t"] = t;
  spec.workflow = {node("a", "t")};
  const auto trace = run(spec, quiet());
  ASSERT_EQ(trace.requests.size(), 1u);
  EXPECT_DOUBLE_EQ(trace.requests[0].t_complete - trace.requests[0].t_submit, 2.0);
  EXPECT_EQ(trace.header.status, "complete");
  EXPECT_EQ(trace.header.host, "test-host");
}

TEST(SimRun, GreedyInflatesSmallKernelLatency) {
  auto spec = sim_spec();
  spec.tasks["big"] = synthetic_task("big", 1, 1'000'000'000, 100);
  spec.tasks["small"] = synthetic_task("small", 20, 10'000'000, 1.0 / 72.0 * 100.0);
  spec.workflow = {node("big", "big"), node("small", "small")};
  const auto co = run(spec, quiet());
  spec.workflow = {node("small", "small")};
  const auto alone = run(spec, quiet());
  auto worst = [](const RunTrace& t) {
    double w = 0;
    for (const auto& r : t.requests) {
      if (r.instance == "small") w = std::max(w, r.t_complete - r.t_submit);
    }
    return w;
  };
  EXPECT_GT(worst(co), 10 * worst(alone));
}

TEST(SimRun, DependencySafetyOnRandomWorkflows) {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 60; ++round) {
    const auto spec = genaibench::testing::random_workflow(rng, 8);
    const auto trace = run(spec, quiet());
    EXPECT_EQ(trace.header.status, "complete");
    expect_dependency_safe(trace);
  }
}

TEST(SimRun, SameSeedSameTrace) {
  std::mt19937_64 rng(8);
  auto spec = genaibench::testing::random_workflow(rng, 6);
  for (auto& [name, t] : spec.tasks) t.profile.jitter = 0.2;
  const auto a = trace_to_json(run(spec, quiet()));
  EXPECT_EQ(a, trace_to_json(run(spec, quiet())));
  spec.seed += 1;
  EXPECT_NE(a, trace_to_json(run(spec, quiet())));
}

TEST(SimRun, StudioE2eMatchesEventSpan) {
  auto spec = parse_config(read_file(fixture("studio_tasks.yaml")) + "---\n" + read_file(fixture("studio_workflow.yaml")));
  spec.mode = Mode::simulated;
  const auto trace = run(spec, quiet());
  const auto dir = genaibench::testing::scratch_dir("studio");
  write_trace(trace, dir);
  const auto back = read_trace(dir);
  Nanos first = std::numeric_limits<Nanos>::max(), last = 0;
  for (const auto& e : back.events) {
    const auto n = std::find_if(back.nodes.begin(), back.nodes.end(), [&](const DagNode& d) { return d.id == e.node; });
    if (n->kind == NodeKind::setup && e.phase == Phase::started) first = std::min(first, e.t);
    if (n->kind == NodeKind::exec && !n->background && e.phase == Phase::finished) last = std::max(last, e.t);
  }
  EXPECT_DOUBLE_EQ(*build_report(back).e2e_seconds, to_seconds(last - first));
  expect_dependency_safe(back);
  EXPECT_LE(*trace.time_of("exec/analysis_1", Phase::finished), *trace.time_of("exec/cover_art", Phase::started));
}

TEST(SimRun, CaptionSegmentsArePaced) {
  auto spec = sim_spec();
  TaskDefinition t;
  t.name = "cap";
  t.app_kind = AppKind::live_captions;
  t.model = "whisper";
  t.profile = default_profile(AppKind::live_captions);
  t.profile.units = 5;
  t.slo = SloSegmentTime{2.0};
  spec.tasks["cap"] = t;
  spec.workflow = {node("cap", "cap")};
  const auto trace = run(spec, quiet());
  ASSERT_EQ(trace.requests.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(trace.requests[i].segment_index, static_cast<int>(i));
    EXPECT_DOUBLE_EQ(trace.requests[i].t_submit - trace.requests[0].t_submit, 2.0 * static_cast<double>(i));
  }
}

TEST(SimRun, BackgroundIsCancelledWhenWorkflowCompletes) {
  auto spec = sim_spec();
  spec.tasks["long"] = synthetic_task("long", 1, 50'000'000'000, 1);
  spec.tasks["short"] = synthetic_task("short", 1, 10'000'000, 1);
  spec.workflow = {node("bg", "long", {}, true), node("fg", "short")};
  const auto trace = run(spec, quiet());
  EXPECT_EQ(trace.header.status, "complete");
  EXPECT_EQ(trace.outcome("exec/bg"), Phase::cancelled);
  EXPECT_EQ(trace.events_of("exec/bg").back()->detail, "workflow complete");
  EXPECT_EQ(trace.outcome("cleanup/bg"), Phase::finished);
  EXPECT_LT(to_seconds(*trace.time_of("exec/bg", Phase::cancelled)), 1.0);
}

TEST(SimRun, TimeoutFailsNodeAndCancelsDependents) {
  auto spec = sim_spec();
  auto slow = synthetic_task("slow", 1, 5'000'000'000);
  slow.timeout = 1.0;
  spec.tasks["slow"] = slow;
  spec.tasks["t"] = synthetic_task("t", 1, 1'000'000);
  spec.workflow = {node("a", "slow"), node("b", "t", {"a"}), node("c", "t")};
  const auto trace = run(spec, quiet());
  EXPECT_EQ(trace.header.status, "failed");
  EXPECT_EQ(trace.outcome("exec/a"), Phase::failed);
  EXPECT_EQ(trace.events_of("exec/a").back()->detail, "timeout");
  EXPECT_EQ(trace.outcome("exec/b"), Phase::cancelled);
  EXPECT_EQ(trace.outcome("exec/c"), Phase::finished);
  EXPECT_EQ(trace.outcome("cleanup/a"), Phase::finished);
  ASSERT_FALSE(trace.requests.empty());
  EXPECT_FALSE(trace.requests[0].ok);
}

TEST(SimRun, AbortThrowsWithPartialTrace) {
  auto spec = sim_spec();
  spec.tasks["t"] = synthetic_task("t", 1, 1'000'000);
  spec.workflow = {node("a", "t")};
  auto opts = quiet();
  std::stop_source src;
  src.request_stop();
  opts.abort = src.get_token();
  try {
    run(spec, opts);
    FAIL() << "expected InterruptedError";
  } catch (const InterruptedError& e) {
    EXPECT_EQ(e.trace().header.status, "interrupted");
    EXPECT_EQ(e.trace().outcome("exec/a"), Phase::cancelled);
  }
}

TEST(SimRun, UtilizationSamplesComeFromTheSimulator) {
  auto spec = sim_spec();
  spec.tasks["t"] = synthetic_task("t", 1, 1'000'000'000, 50);
  spec.workflow = {node("a", "t")};
  const auto trace = run(spec, quiet());
  ASSERT_FALSE(trace.samples.empty());
  bool saw_half = false;
  for (const auto& s : trace.samples) {
    EXPECT_EQ(s.source, "simgpu");
    if (s.kind == MetricKind::smact && std::abs(s.value - 50.0) < 1e-9) saw_half = true;
  }
  EXPECT_TRUE(saw_half);
}

TEST(Run, InvalidSpecIsRejected) {
  auto spec = sim_spec();
  spec.tasks["t"] = synthetic_task("t", 1, 1);
  spec.workflow = {node("a", "missing")};
  EXPECT_THROW(run(spec, quiet()), PreconditionError);
}

// -------------------------------------------------------------------- live

TEST(LiveRun, SyntheticChainInOrder) {
  auto spec = live_spec();
  spec.tasks["t"] = synthetic_task("t", 2, 20'000'000);
  spec.workflow = {node("a", "t"), node("b", "t", {"a"})};
  const auto trace = run(spec, quiet());
  EXPECT_EQ(trace.header.status, "complete");
  EXPECT_EQ(trace.requests.size(), 4u);
  EXPECT_TRUE(trace.header.wall_clock_start);
  expect_dependency_safe(trace);
}

TEST(LiveRun, ExecFailureIsRecordedNotThrown) {
  ScriptedAdapter::cleanups = 0;
  auto spec = live_spec();
  auto bad = synthetic_task("bad", 1, 1'000'000);
  bad.model = "bad";
  spec.tasks["bad"] = bad;
  spec.tasks["ok"] = synthetic_task("ok", 1, 1'000'000);
  spec.workflow = {node("a", "bad"), node("b", "ok", {"a"}), node("c", "ok")};
  const auto trace = run(spec, with_adapter([](const TaskDefinition& t) {
                           if (t.model == "bad") throw std::runtime_error("injected");
                         }));
  EXPECT_EQ(trace.header.status, "failed");
  EXPECT_EQ(trace.outcome("exec/a"), Phase::failed);
  EXPECT_EQ(trace.events_of("exec/a").back()->detail, "injected");
  EXPECT_EQ(trace.outcome("exec/b"), Phase::cancelled);
  EXPECT_EQ(trace.outcome("exec/c"), Phase::finished);
  EXPECT_EQ(trace.outcome("cleanup/a"), Phase::finished);
  int setups_done = 0;
  for (const auto* s : {"setup/a", "setup/b", "setup/c"}) setups_done += trace.outcome(s) == Phase::finished;
  EXPECT_EQ(ScriptedAdapter::cleanups, setups_done);
  expect_dependency_safe(trace);
}

TEST(LiveRun, SetupFailureSkipsCleanup) {
  auto spec = live_spec();
  spec.tasks["t"] = synthetic_task("t", 1, 1'000'000);
  spec.workflow = {node("a", "t")};
  const auto trace = run(spec, with_adapter([](const TaskDefinition&) {}, true));
  EXPECT_EQ(trace.outcome("setup/a"), Phase::failed);
  EXPECT_EQ(trace.outcome("exec/a"), Phase::cancelled);
  EXPECT_EQ(trace.outcome("cleanup/a"), Phase::cancelled);
}

TEST(LiveRun, TimeoutStopsLongRequest) {
  auto spec = live_spec();
  auto t = synthetic_task("t", 1, 30'000'000'000);
  t.timeout = 0.2;
  spec.tasks["t"] = t;
  spec.workflow = {node("a", "t")};
  RunClock clock;
  const auto trace = run(spec, quiet());
  EXPECT_LT(clock.now(), 5.0);
  EXPECT_EQ(trace.outcome("exec/a"), Phase::failed);
  EXPECT_EQ(trace.events_of("exec/a").back()->detail, "timeout");
}

TEST(LiveRun, BackgroundCancelledAfterForeground) {
  auto spec = live_spec();
  spec.tasks["long"] = synthetic_task("long", 1, 30'000'000'000);
  spec.tasks["short"] = synthetic_task("short", 1, 50'000'000);
  spec.workflow = {node("bg", "long", {}, true), node("fg", "short")};
  RunClock clock;
  const auto trace = run(spec, quiet());
  EXPECT_LT(clock.now(), 5.0);
  EXPECT_EQ(trace.header.status, "complete");
  EXPECT_EQ(trace.outcome("exec/bg"), Phase::cancelled);
  EXPECT_EQ(trace.outcome("cleanup/bg"), Phase::finished);
  ASSERT_EQ(trace.requests.size(), 2u);
}

TEST(LiveRun, AbortRunsCleanupsAndThrows) {
  auto spec = live_spec();
  spec.tasks["t"] = synthetic_task("t", 1, 30'000'000'000);
  spec.workflow = {node("a", "t"), node("b", "t", {"a"})};
  auto opts = quiet();
  std::stop_source src;
  opts.abort = src.get_token();
  std::jthread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    src.request_stop();
  });
  try {
    run(spec, opts);
    FAIL() << "expected InterruptedError";
  } catch (const InterruptedError& e) {
    const auto& t = e.trace();
    EXPECT_EQ(t.header.status, "interrupted");
    EXPECT_EQ(t.outcome("exec/a"), Phase::cancelled);
    EXPECT_EQ(t.outcome("cleanup/a"), Phase::finished);
    EXPECT_EQ(t.outcome("exec/b"), Phase::cancelled);
    EXPECT_FALSE(t.time_of("setup/b", Phase::started) && !t.time_of("cleanup/b", Phase::finished));
  }
}

TEST(LiveRun, AbortRunPolicyStopsSiblings) {
  auto spec = live_spec();
  spec.on_failure = FailurePolicy::abort_run;
  auto bad = synthetic_task("bad", 1, 1'000'000);
  bad.model = "bad";
  spec.tasks["bad"] = bad;
  spec.tasks["long"] = synthetic_task("long", 1, 30'000'000'000);
  spec.workflow = {node("a", "bad"), node("b", "long")};
  RunClock clock;
  const auto trace = run(spec, with_adapter([](const TaskDefinition& t) {
                           if (t.model == "bad") {
                             std::this_thread::sleep_for(std::chrono::milliseconds(100));
                             throw std::runtime_error("boom");
                           }
                         }));
  EXPECT_LT(clock.now(), 5.0);
  EXPECT_EQ(trace.header.status, "failed");
  EXPECT_EQ(trace.outcome("exec/b"), Phase::cancelled);
  EXPECT_EQ(trace.outcome("cleanup/b"), Phase::finished);
}

TEST(LiveRun, MaxConcurrencyBoundsExecs) {
  auto spec = live_spec();
  spec.max_concurrency = 1;
  spec.tasks["t"] = synthetic_task("t", 1, 60'000'000);
  spec.workflow = {node("a", "t"), node("b", "t"), node("c", "t")};
  const auto trace = run(spec, quiet());
  std::vector<std::pair<Nanos, Nanos>> spans;
  for (const auto* n : {"exec/a", "exec/b", "exec/c"}) {
    spans.emplace_back(*trace.time_of(n, Phase::started), *trace.time_of(n, Phase::finished));
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) EXPECT_LE(spans[i - 1].second, spans[i].first);
}

TEST(LiveRun, PartitionWithoutDaemonIsUnsupported) {
  auto spec = live_spec();
  spec.policy = Policy::static_partition;
  spec.tasks["t"] = synthetic_task("t", 1, 1'000'000);
  spec.workflow = {node("a", "t")};
  auto opts = quiet();
  opts.partition_probe = [] { return false; };
  EXPECT_THROW(run(spec, opts), UnsupportedPlatform);
}

TEST(LiveRun, MissingEndpointIsAPrecondition) {
  auto spec = live_spec();
  TaskDefinition chat;
  chat.name = "chat";
  chat.app_kind = AppKind::chatbot;
  chat.model = "m";
  spec.tasks["chat"] = chat;
  spec.workflow = {node("a", "chat")};
  EXPECT_THROW(run(spec, quiet()), PreconditionError);
}
