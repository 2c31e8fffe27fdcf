#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "genaibench/adapters.hpp"
#include "genaibench/config.hpp"
#include "genaibench/dag.hpp"
#include "genaibench/error.hpp"
#include "genaibench/monitor.hpp"
#include "genaibench/orchestrator.hpp"
#include "genaibench/trace.hpp"

namespace genaibench {

/// Raised when a run is aborted; carries everything recorded so far
/// (cleanups of started setups have run).
class InterruptedError : public Error {
 public:
  explicit InterruptedError(RunTrace partial);
  const RunTrace& trace() const noexcept { return *trace_; }

 private:
  std::shared_ptr<RunTrace> trace_;
};

enum class NodeState { pending, dispatched, running, finished, failed, cancelled };

/// Readiness and failure bookkeeping shared by the live and simulated
/// executors. Not thread-safe; owned by the executor's control loop.
class WorkflowState {
 public:
  WorkflowState(const Dag& dag, FailurePolicy on_failure);

  const Dag& dag() const { return dag_; }
  NodeState state(std::size_t i) const { return state_[i]; }
  bool terminal(std::size_t i) const;

  /// Pending nodes whose predecessors are all terminal, declaration order.
  /// A cleanup is only ready once its setup finished.
  std::vector<std::size_t> ready() const;

  void mark_dispatched(std::size_t i);
  void mark_running(std::size_t i);
  void mark_finished(std::size_t i);
  /// Marks `i` failed and returns the pending nodes cancelled as a
  /// consequence (per the failure policy), in declaration order. Running
  /// nodes the caller must stop are returned through `to_stop`.
  std::vector<std::size_t> mark_failed(std::size_t i, std::vector<std::size_t>& to_stop);
  /// Cancels a node that has not started; running nodes go through
  /// request_cancel by the executor and mark_cancelled once they stop.
  std::vector<std::size_t> cancel_pending(std::size_t i);
  std::vector<std::size_t> mark_cancelled(std::size_t i);

  /// Every non-background exec node is terminal.
  bool workflow_complete() const;
  /// Every node is terminal.
  bool all_terminal() const;
  /// Background exec nodes still pending or running.
  std::vector<std::size_t> unfinished_background() const;
  /// Everything not terminal except cleanups whose setup finished.
  std::vector<std::size_t> abortable() const;

  bool any_failed() const { return any_failed_; }
  std::size_t in_flight_execs() const;

 private:
  std::vector<std::size_t> cascade_from(std::size_t i);
  void settle_cleanups(std::vector<std::size_t>& cancelled);

  const Dag& dag_;
  FailurePolicy on_failure_;
  std::vector<NodeState> state_;
  std::vector<std::size_t> setup_of_;  // for exec and cleanup nodes
  bool any_failed_ = false;
};

struct RunOptions {
  AdapterRegistry adapters = AdapterRegistry::builtin();
  /// Live collectors for a given sample interval.
  std::function<std::vector<std::unique_ptr<Collector>>(double)> collectors = default_collectors;
  PartitionProbe partition_probe = mps_daemon_present;
  /// Requesting stop aborts the run (InterruptedError).
  std::stop_token abort;
  /// Host name recorded in the trace header.
  std::string host;
};

/// Runs the workflow in `spec.mode`. Node failures are recorded in the
/// trace (status "failed"), not thrown. Throws InterruptedError on abort and
/// UnsupportedPlatform when live partitioning is impossible.
RunTrace run(const BenchmarkSpec& spec, const RunOptions& options = {});

}  // namespace genaibench
