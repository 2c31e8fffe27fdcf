#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "genaibench/types.hpp"

namespace genaibench {

// SLO variants. Thresholds are in seconds and must be strictly positive.
struct SloNone {
  bool operator==(const SloNone&) const = default;
};
struct SloLatencyPair {
  double ttft = 0;
  double tpot = 0;
  bool operator==(const SloLatencyPair&) const = default;
};
struct SloStepTime {
  double step = 0;
  bool operator==(const SloStepTime&) const = default;
};
struct SloSegmentTime {
  double segment = 0;
  bool operator==(const SloSegmentTime&) const = default;
};

using SloSpec = std::variant<SloNone, SloLatencyPair, SloStepTime, SloSegmentTime>;

std::string describe(const SloSpec& slo);

/// A run of identical kernels: `repeat` launches of `duration` each,
/// claiming `sm_demand` percent of the device's SMs.
struct KernelShape {
  Nanos duration = 0;
  double sm_demand = 100.0;
  int repeat = 1;
  bool operator==(const KernelShape&) const = default;
};

/// Simulated behaviour of one application. A request runs `prologue`, then
/// `units` repetitions of `unit`; what a unit means depends on the app kind
/// (a token, a denoising step, an audio segment).
struct WorkloadProfile {
  std::vector<KernelShape> prologue;
  std::vector<KernelShape> unit;
  int units = 0;
  Nanos period = 0;     // live_captions segment pacing
  Nanos sleep = 0;      // live synthetic requests busy-sleep this long
  Nanos setup = 0;      // simulated model load time
  Nanos cleanup = 0;    // simulated unload time
  double jitter = 0.0;  // kernel durations drawn from duration * (1 +/- jitter)
  bool operator==(const WorkloadProfile&) const = default;
};

/// Built-in simulation profile for an application kind.
WorkloadProfile default_profile(AppKind kind);

struct TaskDefinition {
  std::string name;
  AppKind app_kind = AppKind::synthetic;
  std::string model;
  int num_requests = 1;
  Device device = Device::gpu;
  int mps_share = 100;
  SloSpec slo = SloNone{};
  std::optional<std::string> dataset;
  std::optional<std::string> server;  // tasks naming the same server share one instance
  KvCache kv_cache = KvCache::unspecified;
  std::optional<std::string> endpoint;
  std::vector<std::string> launch;
  std::optional<int> steps;
  double timeout = 1800.0;
  WorkloadProfile profile;

  bool operator==(const TaskDefinition&) const = default;
};

struct WorkflowNodeSpec {
  std::string node_id;
  std::string uses;
  std::vector<std::string> depend_on;
  bool background = false;

  bool operator==(const WorkflowNodeSpec&) const = default;
};

struct BenchmarkSpec {
  std::map<std::string, TaskDefinition> tasks;
  std::vector<WorkflowNodeSpec> workflow;  // declaration order
  Policy policy = Policy::greedy;
  Mode mode = Mode::live;
  double sample_interval = 0.1;
  std::string output_dir;
  std::uint64_t seed = 0;
  int sm_count = 72;
  int max_concurrency = 0;  // 0 = unbounded
  FailurePolicy on_failure = FailurePolicy::cancel_dependents;

  bool operator==(const BenchmarkSpec&) const = default;

  const TaskDefinition& task_of(const WorkflowNodeSpec& node) const;
  const WorkflowNodeSpec* find_node(const std::string& node_id) const;
};

/// Parses one or more YAML documents (merged) into a spec. Relative dataset
/// paths are resolved against `base_dir`.
/// Throws SyntaxError, SchemaError or ReferenceError.
BenchmarkSpec parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
BenchmarkSpec load_config(const std::filesystem::path& file);

/// Canonical YAML form; parse_config(serialize_config(s)) == s.
std::string serialize_config(const BenchmarkSpec& spec);

enum class ViolationKind {
  DanglingReference,
  SloMismatch,
  InvalidValue,
  DuplicateId,
  DependencyCycle,
  ConfigConflict,
  MissingEndpoint,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;
  std::string message;
};

/// Every semantic problem in `spec`; empty iff the spec is valid.
std::vector<Violation> validate_spec(const BenchmarkSpec& spec);

/// Tasks a live run cannot reach: no endpoint and no launch command.
std::vector<Violation> check_live_requirements(const BenchmarkSpec& spec);

/// True when `slo` is a legal objective for tasks of `kind`.
bool slo_matches_kind(AppKind kind, const SloSpec& slo);

}  // namespace genaibench
