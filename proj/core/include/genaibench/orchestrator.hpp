#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "genaibench/config.hpp"
#include "genaibench/simgpu.hpp"

namespace genaibench {

/// Environment variable the MPS control daemon reads on client launch.
inline constexpr const char* kMpsThreadPercentageVar = "CUDA_MPS_ACTIVE_THREAD_PERCENTAGE";

/// Shares are fixed when the context is built and never re-balanced.
class PolicyContext {
 public:
  PolicyContext() = default;
  PolicyContext(Policy policy, std::map<std::string, int> shares);

  Policy policy() const { return policy_; }
  /// GPU execution units (app instances, or the server for sharers).
  std::set<std::string> active_apps() const;
  /// Percent of the GPU for `app`; 100 under greedy, 0 for CPU-only apps.
  int share_of(const std::string& app) const;
  const std::map<std::string, int>& shares() const { return shares_; }

 private:
  Policy policy_ = Policy::greedy;
  std::map<std::string, int> shares_;
};

/// greedy: everyone 100. static_partition: floor(100 / n) each, remainder left
/// unassigned. Throws EmptySet for a partition over no apps.
std::map<std::string, int> assign_shares(Policy policy, const std::vector<std::string>& gpu_apps);

/// The GPU execution unit an instance runs in: its shared server if it has
/// one, otherwise the instance itself.
std::string execution_unit(const BenchmarkSpec& spec, const WorkflowNodeSpec& node);

/// Builds the run's context from the GPU-placed units of `spec` (CPU-placed
/// apps are excluded from the divisor).
PolicyContext make_policy_context(const BenchmarkSpec& spec);

struct EnvSpec {
  std::map<std::string, std::string> vars;  // added to the child's environment
  bool operator==(const EnvSpec&) const = default;
};

struct SimPolicyBinding {
  std::string app;
  int quota_sms = 0;  // 0 when the app is unconstrained (greedy)
  bool operator==(const SimPolicyBinding&) const = default;
};

using PlacementBinding = std::variant<EnvSpec, SimPolicyBinding>;

/// Reports whether the partitioning daemon (MPS control) is running.
using PartitionProbe = std::function<bool()>;

/// Default probe: looks for the MPS control pipe in CUDA_MPS_PIPE_DIRECTORY
/// (or /tmp/nvidia-mps).
bool mps_daemon_present();

/// Live mode yields an EnvSpec; simulated mode registers the app's quota
/// (floor(share * sm_count / 100) SMs) in `device` and returns the binding.
/// Throws UnsupportedPlatform when live partitioning is requested and `probe`
/// reports no daemon.
PlacementBinding apply_placement(const std::string& app, int share, Policy policy, Mode mode, SimDevice& device,
                                 const PartitionProbe& probe = mps_daemon_present);

}  // namespace genaibench
