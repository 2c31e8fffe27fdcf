#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "genaibench/metric_sample.hpp"
#include "genaibench/types.hpp"

namespace genaibench {

struct SimDevice {
  int sm_count = 72;
  // Per-app SM quota; empty means the device is not partitioned.
  std::map<std::string, int> partitions;

  int quota_of(const std::string& app) const;
};

struct SimKernel {
  std::string app;
  Nanos submit = 0;
  Nanos duration = 0;  // at full demand
  int sm_demand = 1;

  bool operator==(const SimKernel&) const = default;
};

struct KernelTiming {
  Nanos start = 0;
  Nanos end = 0;
  int sms_held = 0;  // SMs occupied while running (demand, capped at quota)

  bool operator==(const KernelTiming&) const = default;
};

struct SimResult {
  Policy policy = Policy::greedy;
  std::vector<SimKernel> kernels;       // as submitted; cancelled kernels omitted
  std::vector<KernelTiming> timings;    // parallel to `kernels`
  std::map<std::string, Nanos> app_completion;

  Nanos makespan() const;
  bool operator==(const SimResult&) const = default;
};

/// Run time of a kernel under `policy`: partitioned kernels demanding more
/// than their quota are stretched by demand/quota (rounded up to a whole ns).
Nanos effective_duration(const SimKernel& kernel, const SimDevice& device, Policy policy);

/// Incremental discrete-event model of one shared GPU.
///
/// Each app is a serial stream: a kernel reaches the device once it has been
/// submitted and its predecessor from the same app has finished. Under greedy
/// the device is strict FCFS by arrival, ties broken by (submit time, app,
/// kernel index), and the head of the queue blocks everything behind it until
/// enough SMs are free. Under static partitioning every app owns a fixed quota
/// that is never lent out. Kernels are never preempted.
class GpuSimulator {
 public:
  GpuSimulator(SimDevice device, Policy policy);

  /// Queues a kernel; returns its handle. Throws InfeasibleKernel or
  /// PreconditionError for an invalid kernel or a submit time in the past.
  std::size_t submit(const SimKernel& kernel);

  /// Earliest pending arrival or completion, if any.
  std::optional<Nanos> next_event_time() const;

  /// Processes every event at or before `t`; returns handles of kernels that
  /// completed, in completion order.
  std::vector<std::size_t> advance_to(Nanos t);

  /// Drops an app's kernels that have not started. Running kernels finish.
  void cancel_pending(const std::string& app);
  /// Drops one kernel that has not started; false if it already started.
  /// Later kernels of the same app keep their order.
  bool cancel(std::size_t handle);

  bool idle() const;
  Nanos now() const { return now_; }
  const KernelTiming& timing(std::size_t handle) const { return timings_[handle]; }
  bool finished(std::size_t handle) const { return state_[handle] == State::done; }
  const SimDevice& device() const { return device_; }

  SimResult result() const;

 private:
  enum class State { queued, waiting, running, done, cancelled };
  using WaitKey = std::tuple<Nanos, Nanos, std::string, std::size_t, std::size_t>;
  using RunKey = std::tuple<Nanos, std::string, std::size_t, std::size_t>;

  struct AppStream {
    std::deque<std::size_t> queued;  // not yet arrived, submission order
    bool busy = false;               // a kernel is waiting or running
    Nanos free_since = 0;
    std::size_t next_index = 0;
  };

  void arrive(Nanos t);
  void launch(Nanos t);
  void start(std::size_t handle, Nanos t);

  SimDevice device_;
  Policy policy_;
  Nanos now_ = 0;
  int free_sms_ = 0;
  std::vector<SimKernel> kernels_;
  std::vector<KernelTiming> timings_;
  std::vector<State> state_;
  std::vector<std::size_t> index_in_app_;
  std::map<std::string, AppStream> apps_;
  std::set<WaitKey> waiting_;
  std::set<RunKey> running_;
};

/// Batch form: all kernels known up front, each app's kernels sorted by
/// submit time. Throws InfeasibleKernel for demand > sm_count under greedy.
SimResult simulate(const SimDevice& device, const std::vector<SimKernel>& kernels, Policy policy);

/// The app run alone on the whole device under greedy.
SimResult exclusive_baseline(const SimDevice& device, const std::vector<SimKernel>& kernels_of_one_app);

/// Time-averaged SMACT/SMOCC per interval [k*interval, (k+1)*interval), sampled
/// at the interval start, up to `horizon` (defaults to the makespan).
/// Partitioned apps reserve their whole quota while one of their kernels runs.
std::vector<MetricSample> synth_utilization(const SimResult& result, const SimDevice& device, Nanos interval,
                                            std::optional<Nanos> horizon = std::nullopt);

/// SMs requested by a kernel claiming `percent` of a device with `sm_count` SMs.
int sms_for_percent(double percent, int sm_count);

inline constexpr int kSimResultFormatVersion = 1;

/// One kernel per line: {"app", "submit", "duration", "sm_demand"}, times in
/// integer nanoseconds, demand in SMs. Blank lines are skipped. Throws
/// ParseError naming the line.
std::vector<SimKernel> parse_kernel_trace(const std::string& text);
/// JSON document with per-kernel start/end, per-app completion and makespan.
std::string sim_result_to_json(const SimResult& result, const SimDevice& device);

}  // namespace genaibench
