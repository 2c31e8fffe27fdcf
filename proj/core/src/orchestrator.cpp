#include "genaibench/orchestrator.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "genaibench/error.hpp"

namespace genaibench {

PolicyContext::PolicyContext(Policy policy, std::map<std::string, int> shares)
    : policy_(policy), shares_(std::move(shares)) {}

std::set<std::string> PolicyContext::active_apps() const {
  std::set<std::string> out;
  for (const auto& [app, share] : shares_) out.insert(app);
  return out;
}

int PolicyContext::share_of(const std::string& app) const {
  auto it = shares_.find(app);
  if (it == shares_.end()) return policy_ == Policy::greedy ? 100 : 0;
  return it->second;
}

std::map<std::string, int> assign_shares(Policy policy, const std::vector<std::string>& gpu_apps) {
  std::map<std::string, int> out;
  if (policy == Policy::greedy) {
    for (const auto& a : gpu_apps) out[a] = 100;
    return out;
  }
  if (gpu_apps.empty()) throw EmptySet("static partitioning needs at least one GPU app");
  std::set<std::string> distinct(gpu_apps.begin(), gpu_apps.end());
  const int each = 100 / static_cast<int>(distinct.size());
  for (const auto& a : distinct) out[a] = each;
  return out;
}

std::string execution_unit(const BenchmarkSpec& spec, const WorkflowNodeSpec& node) {
  const auto& task = spec.task_of(node);
  return task.server ? "server:" + *task.server : node.node_id;
}

PolicyContext make_policy_context(const BenchmarkSpec& spec) {
  std::vector<std::string> gpu;
  for (const auto& n : spec.workflow) {
    if (spec.task_of(n).device == Device::cpu) continue;
    const auto unit = execution_unit(spec, n);
    if (std::find(gpu.begin(), gpu.end(), unit) == gpu.end()) gpu.push_back(unit);
  }
  if (gpu.empty()) return PolicyContext(spec.policy, {});
  return PolicyContext(spec.policy, assign_shares(spec.policy, gpu));
}

bool mps_daemon_present() {
  const char* dir = std::getenv("CUDA_MPS_PIPE_DIRECTORY");
  const std::filesystem::path pipe = std::filesystem::path(dir ? dir : "/tmp/nvidia-mps") / "control";
  struct stat st {};
  return ::stat(pipe.c_str(), &st) == 0 && S_ISFIFO(st.st_mode);
}

PlacementBinding apply_placement(const std::string& app, int share, Policy policy, Mode mode, SimDevice& device,
                                 const PartitionProbe& probe) {
  if (share <= 0 || share > 100) throw PreconditionError("share for '" + app + "' must be in (0, 100]");
  if (mode == Mode::live) {
    EnvSpec env;
    if (policy == Policy::static_partition) {
      if (!probe || !probe()) {
        throw UnsupportedPlatform("GPU partitioning requested but no MPS control daemon is running");
      }
      env.vars[kMpsThreadPercentageVar] = std::to_string(share);
    }
    return env;
  }
  if (policy == Policy::greedy) return SimPolicyBinding{app, 0};
  const int quota = static_cast<int>(static_cast<long>(share) * device.sm_count / 100);
  if (quota < 1) {
    throw PreconditionError("a " + std::to_string(share) + "% share of " + std::to_string(device.sm_count) +
                            " SMs is empty");
  }
  device.partitions[app] = quota;
  return SimPolicyBinding{app, quota};
}

}  // namespace genaibench
