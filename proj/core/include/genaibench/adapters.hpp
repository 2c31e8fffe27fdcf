#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "genaibench/clock.hpp"
#include "genaibench/config.hpp"
#include "genaibench/record.hpp"
#include "genaibench/subprocess.hpp"

namespace genaibench {

struct Placement {
  Device device = Device::gpu;
  int partition_share = 100;
  bool kv_cache_on_cpu = false;
  std::map<std::string, std::string> env;  // from the orchestrator, passed to launched servers
};

/// A running (or reachable) backend. One handle may serve several tasks.
class ServerHandle {
 public:
  std::string endpoint;  // base URL; empty for in-process apps
  std::string model;
  std::optional<Subprocess> process;
  std::vector<std::string> argv;  // launch command, if launched

  void acquire(int n = 1);
  /// Returns the number of references left, or -1 when none was held.
  int release();
  int refs() const;

 private:
  mutable std::mutex mutex_;
  int refs_ = 0;
};

struct RequestContext {
  std::string instance;
  const RunClock* clock = nullptr;
  std::uint64_t seed = 0;
  std::stop_token stop;
};

/// The three-function application contract.
class Adapter {
 public:
  virtual ~Adapter() = default;

  /// Starts or connects to the backend. Throws LaunchError or ConnectionError.
  virtual std::unique_ptr<ServerHandle> setup(const TaskDefinition& task, const Placement& placement);
  /// Issues the task's requests and returns one record per evaluation source
  /// (per request, or per segment for live captions).
  virtual std::vector<RequestRecord> execute(ServerHandle& handle, const TaskDefinition& task,
                                             const RequestContext& ctx) = 0;
  /// Releases backend resources; terminates a launched server.
  virtual void cleanup(ServerHandle& handle);
};

class AdapterRegistry {
 public:
  using Factory = std::function<std::shared_ptr<Adapter>()>;

  /// Registry with the built-in adapter for every app kind.
  static AdapterRegistry builtin();

  void add(AppKind kind, Factory factory);
  /// Throws AdapterNotFound.
  std::shared_ptr<Adapter> get(AppKind kind) const;

 private:
  std::map<AppKind, Factory> factories_;
};

/// One backend for every sharer. All sharers must agree on model, device and
/// KV-cache placement (ConfigConflict otherwise). The handle starts with one
/// reference per sharer.
std::unique_ptr<ServerHandle> shared_setup(const std::vector<TaskDefinition>& tasks, const Placement& placement,
                                           Adapter& adapter);
/// Drops one reference; the last release runs adapter.cleanup. Returns true
/// when cleanup ran.
bool release_shared(ServerHandle& handle, Adapter& adapter);

// ---------------------------------------------------------------- launching

/// Expands {model}, {port}, {share} and {kv_cache_flag} ("--no-kv-offload"
/// when the KV cache is placed on the CPU). Arguments that expand to nothing
/// are dropped.
std::vector<std::string> expand_launch(const std::vector<std::string>& argv_template, const TaskDefinition& task,
                                       const Placement& placement, int port);

/// Launches task.launch (or connects to task.endpoint) and waits until the
/// endpoint answers HTTP. Throws LaunchError.
std::unique_ptr<ServerHandle> launch_server(const TaskDefinition& task, const Placement& placement,
                                            double ready_timeout_s = 300.0);

// ----------------------------------------------------------------- datasets

/// Prompts from a text file (one per line) or JSON lines ("prompt", "text"
/// or "question" field). Blank lines are skipped. Throws Error.
std::vector<std::string> load_prompts(const std::filesystem::path& path);
/// `n` prompts drawn uniformly with replacement using a seeded generator.
std::vector<std::string> sample_prompts(const std::vector<std::string>& prompts, std::size_t n, std::uint64_t seed);
/// Fallback prompts for tasks without a dataset.
std::vector<std::string> builtin_prompts(AppKind kind);

struct AudioClip {
  int sample_rate = 16000;
  int channels = 1;
  std::vector<std::int16_t> samples;  // interleaved

  double seconds() const;
  bool operator==(const AudioClip&) const = default;
};

/// 16-bit PCM WAV only. Throws Error.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip parse_wav(const std::string& bytes);
std::string encode_wav(const AudioClip& clip);
AudioClip silence(double seconds, int sample_rate = 16000);
/// Consecutive segments of `period` seconds each; a shorter tail is kept.
std::vector<AudioClip> segment_audio(const AudioClip& clip, double period);

// ------------------------------------------------------------ chat streams

/// Splits a server-sent-event byte stream into "data:" payloads.
class SseDecoder {
 public:
  std::vector<std::string> feed(std::string_view chunk);

 private:
  std::string buffer_;
  std::string data_;
};

/// Builds a chatbot RequestRecord from streamed completion chunks.
class ChatStreamRecorder {
 public:
  explicit ChatStreamRecorder(RequestRecord base);

  /// One SSE payload received at `t`.
  void on_payload(const std::string& payload, double t);
  bool done() const { return done_; }
  /// Closes the record at `t`; `error` marks it failed (partial).
  RequestRecord finish(double t, const std::optional<std::string>& error = std::nullopt);

 private:
  RequestRecord record_;
  bool done_ = false;
};

/// One streamed chat completion (OpenAI wire shape).
RequestRecord chatbot_execute(const ServerHandle& handle, const std::string& prompt, const std::string& request_id,
                              const TaskDefinition& task, const RequestContext& ctx);

// ---------------------------------------------------------------- imagegen

/// Step durations from (time, completed steps) progress polls. Steps that
/// complete between two polls share the interval equally; steps still open at
/// `t_complete` share the tail.
std::vector<double> step_times_from_progress(const std::vector<std::pair<double, int>>& observations,
                                             double t_submit, double t_complete, int steps);
std::vector<double> uniform_step_split(double total, int steps);

inline constexpr const char* kNoProgressFlag = "no progress signal: uniform step split";

RequestRecord imagegen_execute(const ServerHandle& handle, const std::string& prompt, const std::string& request_id,
                               const TaskDefinition& task, const RequestContext& ctx);

// ------------------------------------------------------------ live captions

/// Submits segment i at i * period after the call and records its latency.
std::vector<RequestRecord> livecaptions_execute(const ServerHandle& handle, const AudioClip& audio, double period,
                                                const std::string& request_prefix, const TaskDefinition& task,
                                                const RequestContext& ctx);

// ----------------------------------------------------------- deep research

/// Opaque long request; only submit and completion are recorded.
RequestRecord deepresearch_execute(const ServerHandle& handle, const std::string& prompt,
                                   const std::string& request_id, const TaskDefinition& task,
                                   const RequestContext& ctx);

// --------------------------------------------------------------- synthetic

/// Busy-sleeps for the profile's sleep time (or its total kernel time).
RequestRecord synthetic_execute(const WorkloadProfile& profile, const std::string& request_id,
                                const TaskDefinition& task, const RequestContext& ctx);

}  // namespace genaibench
