#include <gtest/gtest.h>

#include <random>

#include "genaibench/config.hpp"
#include "genaibench/error.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::fixture;
using genaibench::testing::read_file;

namespace {

std::size_t count_kind(const std::vector<Violation>& vs, ViolationKind kind) {
  return static_cast<std::size_t>(std::count_if(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == kind; }));
}

}  // namespace

TEST(ParseConfig, ImageGenFragment) {
  const auto spec = parse_config(read_file(fixture("studio_tasks.yaml")));
  const auto& t = spec.tasks.at("Creating Cover Art (ImageGen)");
  EXPECT_EQ(t.app_kind, AppKind::imagegen);
  EXPECT_EQ(t.num_requests, 5);
  EXPECT_EQ(t.device, Device::gpu);
  EXPECT_EQ(t.slo, SloSpec(SloStepTime{1.0}));
  EXPECT_EQ(t.model, "SD-3.5-Medium-Turbo");
}

TEST(ParseConfig, EmptyDocumentIsValid) {
  const auto spec = parse_config("");
  EXPECT_TRUE(spec.tasks.empty());
  EXPECT_TRUE(spec.workflow.empty());
  EXPECT_TRUE(validate_spec(spec).empty());
}

TEST(ParseConfig, ContentCreationWorkflow) {
  const auto spec = load_config(fixture("content_creation.yaml"));
  ASSERT_EQ(spec.tasks.size(), 5u);
  ASSERT_EQ(spec.workflow.size(), 5u);

  const auto* analysis = spec.find_node("analysis");
  ASSERT_NE(analysis, nullptr);
  EXPECT_TRUE(analysis->background);
  const auto* outline = spec.find_node("outline");
  ASSERT_NE(outline, nullptr);
  EXPECT_EQ(outline->depend_on, (std::vector<std::string>{"brainstorm", "analysis"}));
  EXPECT_FALSE(outline->background);

  EXPECT_EQ(spec.tasks.at("Brainstorm (chatbot)").slo, SloSpec(SloLatencyPair{1.0, 0.25}));
  EXPECT_EQ(spec.tasks.at("Creating Cover Art (imagegen)").slo, SloSpec(SloStepTime{1.0}));
  EXPECT_EQ(spec.tasks.at("Generating Captions (live_captions)").slo, SloSpec(SloSegmentTime{2.0}));
  EXPECT_EQ(spec.tasks.at("Creating Cover Art (imagegen)").model, "stable-diffusion-3.5-medium-turbo");
  EXPECT_EQ(spec.tasks.at("Preparing Outline (chatbot)").num_requests, 20);
  EXPECT_TRUE(validate_spec(spec).empty());
}

TEST(ParseConfig, SplitDocumentsMerge) {
  const auto text = read_file(fixture("studio_tasks.yaml")) + "---\n" + read_file(fixture("studio_workflow.yaml"));
  const auto spec = parse_config(text);
  EXPECT_EQ(spec.tasks.size(), 3u);
  ASSERT_EQ(spec.workflow.size(), 4u);
  EXPECT_EQ(spec.workflow[3].node_id, "generate_captions");
  EXPECT_EQ(spec.workflow[3].depend_on, (std::vector<std::string>{"cover_art", "analysis_2"}));
  EXPECT_EQ(spec.tasks.at("Analysis (DeepResearch)").device, Device::cpu);
  EXPECT_EQ(spec.tasks.at("Analysis (DeepResearch)").app_kind, AppKind::deep_research);
}

TEST(ParseConfig, Defaults) {
  const auto spec = parse_config(R"(
Chat (chatbot):
  num_requests: 1
  device: gpu
workflows:
  chat:
    uses: Chat (chatbot)
)");
  EXPECT_EQ(spec.tasks.at("Chat (chatbot)").mps_share, 100);
  EXPECT_FALSE(spec.workflow[0].background);
  EXPECT_EQ(spec.policy, Policy::greedy);
  EXPECT_EQ(spec.mode, Mode::live);
  EXPECT_DOUBLE_EQ(spec.sample_interval, 0.1);
  EXPECT_EQ(spec.seed, 0u);
  EXPECT_DOUBLE_EQ(spec.tasks.at("Chat (chatbot)").timeout, 1800.0);
  EXPECT_EQ(spec.tasks.at("Chat (chatbot)").slo, SloSpec(SloNone{}));
}

TEST(ParseConfig, DurationLiterals) {
  const auto spec = parse_config(R"(
A (chatbot):
  num_requests: 1
  device: gpu
  slo: [1s, 250ms]
B (chatbot):
  num_requests: 1
  device: gpu
  slo: {ttft: 0.5, tpot: 0.25s}
workflows: {}
sample_interval: 50ms
)");
  EXPECT_EQ(spec.tasks.at("A (chatbot)").slo, SloSpec(SloLatencyPair{1.0, 0.25}));
  EXPECT_EQ(spec.tasks.at("B (chatbot)").slo, SloSpec(SloLatencyPair{0.5, 0.25}));
  EXPECT_DOUBLE_EQ(spec.sample_interval, 0.05);
}

TEST(ParseConfig, MalformedYamlIsSyntaxError) {
  EXPECT_THROW(parse_config("a: [1, 2\nb: }"), SyntaxError);
}

TEST(ParseConfig, UnknownKeyIsSchemaError) {
  EXPECT_THROW(parse_config(R"(
Chat (chatbot):
  num_requests: 1
  device: gpu
  slos: [1s, 0.25s]
)"),
               SchemaError);
  EXPECT_THROW(parse_config("workflows:\n  x:\n    uses: y\n    depends_on: []\n"), SchemaError);
}

TEST(ParseConfig, MissingRequiredFieldIsSchemaError) {
  EXPECT_THROW(parse_config("Chat (chatbot):\n  device: gpu\n"), SchemaError);
  EXPECT_THROW(parse_config("Chat (chatbot):\n  num_requests: one\n  device: gpu\n"), SchemaError);
}

TEST(ParseConfig, UndeclaredReferencesAreReferenceErrors) {
  EXPECT_THROW(load_config(fixture("dangling.yaml")), ReferenceError);
  EXPECT_THROW(parse_config("workflows:\n  x:\n    uses: Nothing\n"), ReferenceError);
}

TEST(ParseConfig, DatasetResolvedAgainstBaseDir) {
  const auto spec = parse_config("Chat (chatbot):\n  num_requests: 1\n  device: gpu\n  dataset: data/p.txt\n",
                                 "/srv/bench");
  EXPECT_EQ(*spec.tasks.at("Chat (chatbot)").dataset, "/srv/bench/data/p.txt");
}

TEST(ValidateSpec, ChatbotWithStepObjectiveIsMismatch) {
  const auto spec = parse_config(R"(
Chat (chatbot):
  num_requests: 1
  device: gpu
  slo: {step: 1s}
workflows:
  chat:
    uses: Chat (chatbot)
)");
  const auto vs = validate_spec(spec);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::SloMismatch);
}

TEST(ValidateSpec, DanglingDependency) {
  BenchmarkSpec spec;
  spec.tasks["t"] = genaibench::testing::synthetic_task("t", 1, 1'000'000);
  spec.workflow = {genaibench::testing::node("a", "t", {"ghost"})};
  const auto vs = validate_spec(spec);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::DanglingReference);
}

TEST(ValidateSpec, ReportsEveryProblem) {
  BenchmarkSpec spec;
  auto t = genaibench::testing::synthetic_task("t", 0, 1'000'000);
  t.mps_share = 0;
  spec.tasks["t"] = t;
  spec.workflow = {genaibench::testing::node("a", "t", {"ghost"}), genaibench::testing::node("a", "t")};
  const auto vs = validate_spec(spec);
  EXPECT_EQ(count_kind(vs, ViolationKind::DanglingReference), 1u);
  EXPECT_EQ(count_kind(vs, ViolationKind::DuplicateId), 1u);
  EXPECT_GE(count_kind(vs, ViolationKind::InvalidValue), 2u);
}

TEST(ValidateSpec, CycleIsReported) {
  BenchmarkSpec spec;
  spec.tasks["t"] = genaibench::testing::synthetic_task("t", 1, 1'000'000);
  spec.workflow = {genaibench::testing::node("a", "t", {"b"}), genaibench::testing::node("b", "t", {"a"})};
  EXPECT_EQ(count_kind(validate_spec(spec), ViolationKind::DependencyCycle), 1u);
}

TEST(ValidateSpec, NonPositiveSloThreshold) {
  BenchmarkSpec spec;
  auto t = genaibench::testing::synthetic_task("t", 1, 1'000'000);
  t.app_kind = AppKind::chatbot;
  t.slo = SloLatencyPair{0.0, 0.25};
  spec.tasks["t"] = t;
  spec.workflow = {genaibench::testing::node("a", "t")};
  EXPECT_EQ(count_kind(validate_spec(spec), ViolationKind::InvalidValue), 1u);
}

TEST(ValidateSpec, LiveRequirements) {
  const auto spec = load_config(fixture("content_creation.yaml"));
  EXPECT_EQ(check_live_requirements(spec).size(), 5u);
  auto with_endpoints = spec;
  for (auto& [name, t] : with_endpoints.tasks) t.endpoint = "http://127.0.0.1:8000";
  EXPECT_TRUE(check_live_requirements(with_endpoints).empty());
}

namespace {

BenchmarkSpec random_spec(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(1, 5);
  std::uniform_real_distribution<double> coin(0, 1);
  auto secs = [&] { return std::uniform_int_distribution<int>(1, 400)(rng) * 0.005; };
  auto ms = [&] { return std::uniform_int_distribution<Nanos>(1, 5000)(rng) * 1'000'000; };

  BenchmarkSpec spec;
  const AppKind kinds[] = {AppKind::chatbot, AppKind::deep_research, AppKind::imagegen, AppKind::live_captions,
                           AppKind::synthetic};
  const int ntasks = small(rng);
  for (int i = 0; i < ntasks; ++i) {
    TaskDefinition t;
    t.app_kind = kinds[std::uniform_int_distribution<int>(0, 4)(rng)];
    t.name = "Task " + std::to_string(i) + " (" + std::string(to_string(t.app_kind)) + ")";
    t.model = coin(rng) < 0.5 ? "model-" + std::to_string(i) : "";
    t.num_requests = small(rng);
    t.device = coin(rng) < 0.7 ? Device::gpu : (coin(rng) < 0.5 ? Device::cpu : Device::hybrid);
    t.mps_share = std::uniform_int_distribution<int>(1, 100)(rng);
    switch (t.app_kind) {
      case AppKind::chatbot: t.slo = SloLatencyPair{secs(), secs()}; break;
      case AppKind::imagegen: t.slo = SloStepTime{secs()}; break;
      case AppKind::live_captions: t.slo = SloSegmentTime{secs()}; break;
      default: break;
    }
    if (coin(rng) < 0.3) t.dataset = "/data/prompts-" + std::to_string(i) + ".jsonl";
    if (coin(rng) < 0.3) t.server = "shared";
    if (coin(rng) < 0.3) t.kv_cache = coin(rng) < 0.5 ? KvCache::cpu : KvCache::gpu;
    if (coin(rng) < 0.3) t.endpoint = "http://127.0.0.1:" + std::to_string(8000 + i);
    if (coin(rng) < 0.3) t.launch = {"server-bin", "--model", "{model}", "--port", "{port}"};
    if (coin(rng) < 0.3) t.steps = small(rng);
    t.timeout = secs() * 100;
    t.profile = default_profile(t.app_kind);
    if (coin(rng) < 0.5) {
      t.profile.prologue = {{ms(), static_cast<double>(small(rng) * 10), small(rng)}};
      t.profile.unit = {{ms(), 12.5, 1}, {ms(), 100.0, small(rng)}};
      t.profile.units = small(rng);
      t.profile.period = ms();
      t.profile.sleep = ms();
      t.profile.setup = ms();
      t.profile.cleanup = ms();
      t.profile.jitter = small(rng) * 0.05;
    }
    spec.tasks[t.name] = t;
  }
  std::vector<std::string> names;
  for (const auto& [n, t] : spec.tasks) names.push_back(n);
  const int nnodes = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < nnodes; ++i) {
    WorkflowNodeSpec n;
    n.node_id = "node_" + std::to_string(i);
    n.uses = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
    for (int j = 0; j < i; ++j) {
      if (coin(rng) < 0.3) n.depend_on.push_back("node_" + std::to_string(j));
    }
    n.background = coin(rng) < 0.2;
    spec.workflow.push_back(n);
  }
  spec.policy = coin(rng) < 0.5 ? Policy::greedy : Policy::static_partition;
  spec.mode = coin(rng) < 0.5 ? Mode::live : Mode::simulated;
  spec.sample_interval = std::uniform_int_distribution<int>(1, 100)(rng) * 0.01;
  if (coin(rng) < 0.5) spec.output_dir = "out/run " + std::to_string(rng() % 100);
  spec.seed = rng();
  spec.sm_count = std::uniform_int_distribution<int>(1, 144)(rng);
  spec.max_concurrency = std::uniform_int_distribution<int>(0, 4)(rng);
  spec.on_failure = coin(rng) < 0.5 ? FailurePolicy::cancel_dependents : FailurePolicy::abort_run;
  return spec;
}

}  // namespace

TEST(SerializeConfig, RoundTripsGeneratedSpecs) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 300; ++i) {
    const auto spec = random_spec(rng);
    const auto text = serialize_config(spec);
    BenchmarkSpec back;
    ASSERT_NO_THROW(back = parse_config(text)) << text;
    EXPECT_EQ(back, spec) << text;
  }
}

TEST(SerializeConfig, RoundTripsContentCreation) {
  const auto spec = load_config(fixture("content_creation.yaml"));
  EXPECT_EQ(parse_config(serialize_config(spec)), spec);
}
