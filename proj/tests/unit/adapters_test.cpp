#include <gtest/gtest.h>

#include <atomic>
#include <numeric>

#include <json.hpp>

#include "genaibench/adapters.hpp"
#include "genaibench/error.hpp"
#include "genaibench/metrics.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::fixture;
using genaibench::testing::read_file;
using genaibench::testing::synthetic_task;

namespace {

struct CountingAdapter : Adapter {
  std::atomic<int> setups{0};
  std::atomic<int> cleanups{0};
  Placement seen;

  std::unique_ptr<ServerHandle> setup(const TaskDefinition& task, const Placement& placement) override {
    ++setups;
    seen = placement;
    auto h = std::make_unique<ServerHandle>();
    h->model = task.model;
    return h;
  }
  std::vector<RequestRecord> execute(ServerHandle&, const TaskDefinition&, const RequestContext&) override {
    return {};
  }
  void cleanup(ServerHandle&) override { ++cleanups; }
};

TaskDefinition llm_task(const std::string& name, KvCache kv = KvCache::unspecified) {
  TaskDefinition t;
  t.name = name;
  t.app_kind = AppKind::chatbot;
  t.model = "Llama-3.2-3B";
  t.server = "llm";
  t.kv_cache = kv;
  return t;
}

}  // namespace

TEST(ChatStream, ThreeTokens) {
  RequestRecord base;
  base.t_submit = 0;
  ChatStreamRecorder rec(base);
  for (double t : {0.5, 0.7, 0.9}) rec.on_payload(R"({"choices":[{"delta":{"content":"x"}}]})", t);
  rec.on_payload("[DONE]", 0.9);
  EXPECT_TRUE(rec.done());
  const auto r = rec.finish(0.9);
  EXPECT_TRUE(r.ok);
  EXPECT_DOUBLE_EQ(r.t_first_output, 0.5);
  EXPECT_EQ(r.token_times, (std::vector<double>{0.5, 0.7, 0.9}));
}

TEST(ChatStream, ReplayedFixtureMatchesHandComputation) {
  // Tokens complete at 0.5, 0.62, 0.66 (payload split across chunks) and 0.9;
  // the role-only delta at 0.42 carries no text.
  RequestRecord base;
  base.request_id = "replay";
  ChatStreamRecorder rec(base);
  SseDecoder sse;
  std::istringstream in(read_file(fixture("chat_stream.jsonl")));
  std::string line;
  double last = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    last = j["t"].get<double>();
    if (!j.contains("chunk")) continue;
    for (const auto& payload : sse.feed(j["chunk"].get<std::string>())) rec.on_payload(payload, last);
  }
  ASSERT_TRUE(rec.done());
  const auto r = rec.finish(last);
  EXPECT_EQ(r.token_times, (std::vector<double>{0.5, 0.62, 0.66, 0.9}));
  const auto d = derive_ttft_tpot(r);
  EXPECT_NEAR(d.ttft, 0.5, 1e-12);
  EXPECT_NEAR(*d.tpot, 0.4 / 3.0, 1e-12);
}

TEST(ChatStream, ErrorMarksPartial) {
  ChatStreamRecorder rec({});
  rec.on_payload(R"({"choices":[{"delta":{"content":"a"}}]})", 0.3);
  const auto r = rec.finish(0.4, "stream aborted");
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.detail, "stream aborted");
  EXPECT_EQ(r.token_times.size(), 1u);
  EXPECT_FALSE(ChatStreamRecorder({}).finish(1.0).ok);
}

TEST(SseDecoder, JoinsMultiLineData) {
  SseDecoder d;
  EXPECT_TRUE(d.feed("data: a\r\n").empty());
  EXPECT_EQ(d.feed("data: b\r\n\r\n: comment\n\n"), (std::vector<std::string>{"a\nb"}));
}

TEST(StepTimes, FromProgress) {
  const auto s = step_times_from_progress({{0.8, 1}, {1.6, 2}, {2.4, 3}, {3.2, 4}}, 0.0, 3.2, 4);
  ASSERT_EQ(s.size(), 4u);
  for (double v : s) EXPECT_NEAR(v, 0.8, 1e-12);
}

TEST(StepTimes, StepsBetweenPollsShareTheInterval) {
  const auto s = step_times_from_progress({{1.0, 0}, {2.0, 2}}, 0.0, 3.0, 3);
  EXPECT_EQ(s, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(StepTimes, UniformFallback) {
  EXPECT_EQ(uniform_step_split(4.0, 4), (std::vector<double>{1.0, 1.0, 1.0, 1.0}));
  EXPECT_TRUE(std::string(kNoProgressFlag).find("uniform") != std::string::npos);
}

TEST(StepTimes, FixtureFeedsSloEvaluator) {
  RequestRecord r;
  r.request_id = "img";
  r.step_times = step_times_from_progress({{0.9, 1}, {2.0, 2}}, 0.0, 2.95, 3);
  EXPECT_NEAR(r.step_times[0], 0.9, 1e-12);
  EXPECT_NEAR(r.step_times[1], 1.1, 1e-12);
  EXPECT_NEAR(r.step_times[2], 0.95, 1e-12);
  const auto res = evaluate_slo({r}, SloStepTime{1.0});
  EXPECT_EQ(res.met, 2u);
  EXPECT_EQ(res.evaluated, 3u);
}

TEST(Audio, WavRoundTripAndSegments) {
  auto clip = silence(5.0, 16000);
  clip.samples[7] = 1234;
  const auto back = parse_wav(encode_wav(clip));
  EXPECT_EQ(back, clip);
  EXPECT_DOUBLE_EQ(back.seconds(), 5.0);
  const auto segs = segment_audio(clip, 2.0);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_DOUBLE_EQ(segs[0].seconds(), 2.0);
  EXPECT_DOUBLE_EQ(segs[2].seconds(), 1.0);
  EXPECT_TRUE(segment_audio(AudioClip{}, 2.0).empty());
  EXPECT_THROW(parse_wav("RIFF"), Error);
}

TEST(LiveCaptions, EmptyAudioGivesNoRecords) {
  RunClock clock;
  ServerHandle h;
  RequestContext ctx{"cap", &clock, 0, {}};
  TaskDefinition t;
  EXPECT_TRUE(livecaptions_execute(h, AudioClip{}, 2.0, "cap", t, ctx).empty());
}

TEST(Synthetic, SleepDuration) {
  RunClock clock;
  auto t = synthetic_task("s", 1, 100'000'000);
  RequestContext ctx{"s", &clock, 0, {}};
  const auto r = synthetic_execute(t.profile, "s/0", t, ctx);
  EXPECT_TRUE(r.ok);
  EXPECT_GE(r.t_complete - r.t_submit, 0.1);
  EXPECT_LT(r.t_complete - r.t_submit, 0.15);
  EXPECT_LE(r.t_submit, r.t_first_output);
  EXPECT_LE(r.t_first_output, r.t_complete);
}

TEST(Synthetic, StopCancels) {
  RunClock clock;
  auto t = synthetic_task("s", 1, 10'000'000'000);
  std::stop_source src;
  src.request_stop();
  RequestContext ctx{"s", &clock, 0, src.get_token()};
  const auto r = synthetic_execute(t.profile, "s/0", t, ctx);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.detail, "cancelled");
  EXPECT_LT(r.t_complete - r.t_submit, 0.1);
}

TEST(SharedSetup, CleanupRunsOncePerServer) {
  for (int sharers = 1; sharers <= 5; ++sharers) {
    CountingAdapter a;
    std::vector<TaskDefinition> tasks;
    for (int i = 0; i < sharers; ++i) tasks.push_back(llm_task("t" + std::to_string(i)));
    auto h = shared_setup(tasks, {}, a);
    EXPECT_EQ(a.setups, 1);
    EXPECT_EQ(h->refs(), sharers);
    for (int i = 0; i < sharers; ++i) EXPECT_EQ(release_shared(*h, a), i == sharers - 1);
    EXPECT_FALSE(release_shared(*h, a));
    EXPECT_EQ(a.cleanups, 1);
  }
}

TEST(SharedSetup, KvPlacementConflict) {
  CountingAdapter a;
  EXPECT_THROW(shared_setup({llm_task("a", KvCache::cpu), llm_task("b", KvCache::gpu)}, {}, a), ConfigConflict);
  EXPECT_EQ(a.setups, 0);
  auto other = llm_task("c");
  other.model = "other";
  EXPECT_THROW(shared_setup({llm_task("a"), other}, {}, a), ConfigConflict);
}

TEST(SharedSetup, AgreedCpuKvReachesPlacement) {
  CountingAdapter a;
  shared_setup({llm_task("a", KvCache::cpu), llm_task("b")}, {}, a);
  EXPECT_TRUE(a.seen.kv_cache_on_cpu);
}

TEST(Launch, TemplateExpansion) {
  auto t = llm_task("a", KvCache::cpu);
  Placement p;
  p.partition_share = 33;
  const auto argv = expand_launch({"llama-server", "-m", "{model}", "--port", "{port}", "{kv_cache_flag}"}, t, p, 8080);
  EXPECT_EQ(argv, (std::vector<std::string>{"llama-server", "-m", "Llama-3.2-3B", "--port", "8080", "--no-kv-offload"}));
  t.kv_cache = KvCache::gpu;
  EXPECT_EQ(expand_launch({"{kv_cache_flag}", "{share}"}, t, p, 1), (std::vector<std::string>{"33"}));
}

TEST(Registry, BuiltinsAndMissing) {
  auto r = AdapterRegistry::builtin();
  for (auto k : {AppKind::chatbot, AppKind::deep_research, AppKind::imagegen, AppKind::live_captions,
                 AppKind::synthetic}) {
    EXPECT_NE(r.get(k), nullptr);
  }
  AdapterRegistry empty;
  EXPECT_THROW(empty.get(AppKind::chatbot), AdapterNotFound);
}

TEST(Datasets, LoadAndSample) {
  const auto jl = load_prompts(fixture("prompts.jsonl"));
  EXPECT_EQ(jl.size(), 3u);
  const auto txt = load_prompts(fixture("prompts.txt"));
  EXPECT_EQ(txt.size(), 3u);
  const auto a = sample_prompts(txt, 10, 42);
  EXPECT_EQ(a, sample_prompts(txt, 10, 42));
  EXPECT_EQ(a.size(), 10u);
  for (const auto& p : a) EXPECT_NE(std::find(txt.begin(), txt.end(), p), txt.end());
  EXPECT_THROW(sample_prompts({}, 1, 0), PreconditionError);
  EXPECT_THROW(load_prompts(fixture("missing.txt")), Error);
}
