#include "genaibench/simgpu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "genaibench/error.hpp"

namespace genaibench {

int SimDevice::quota_of(const std::string& app) const {
  auto it = partitions.find(app);
  return it == partitions.end() ? 0 : it->second;
}

Nanos SimResult::makespan() const {
  Nanos end = 0;
  for (const auto& t : timings) end = std::max(end, t.end);
  return end;
}

int sms_for_percent(double percent, int sm_count) {
  const double raw = std::ceil(percent * sm_count / 100.0 - 1e-9);
  return std::clamp(static_cast<int>(raw), 1, std::max(sm_count, 1));
}

Nanos effective_duration(const SimKernel& kernel, const SimDevice& device, Policy policy) {
  if (policy == Policy::greedy) return kernel.duration;
  const Nanos quota = device.quota_of(kernel.app);
  if (kernel.sm_demand <= quota) return kernel.duration;
  // ceil(duration * demand / quota); products stay well inside int64 for
  // durations under ~1e6 s and demands under ~1e4 SMs.
  const auto num = static_cast<__int128>(kernel.duration) * kernel.sm_demand;
  return static_cast<Nanos>((num + quota - 1) / quota);
}

GpuSimulator::GpuSimulator(SimDevice device, Policy policy)
    : device_(std::move(device)), policy_(policy), free_sms_(device_.sm_count) {
  if (device_.sm_count < 1) throw PreconditionError("device needs at least one SM");
  if (policy_ == Policy::static_partition) {
    long total = 0;
    for (const auto& [app, quota] : device_.partitions) {
      if (quota < 1) throw PreconditionError("partition for '" + app + "' has no SMs");
      total += quota;
    }
    if (total > device_.sm_count) throw PreconditionError("partition quotas exceed the device's SMs");
  }
}

std::size_t GpuSimulator::submit(const SimKernel& kernel) {
  if (kernel.duration <= 0) throw PreconditionError("kernel duration must be positive");
  if (kernel.sm_demand < 1) throw PreconditionError("kernel must demand at least one SM");
  if (kernel.submit < now_) throw PreconditionError("kernel submitted in the simulated past");
  if (policy_ == Policy::greedy && kernel.sm_demand > device_.sm_count) {
    throw InfeasibleKernel("kernel of '" + kernel.app + "' demands " + std::to_string(kernel.sm_demand) +
                           " SMs on a " + std::to_string(device_.sm_count) + "-SM device");
  }
  if (policy_ == Policy::static_partition && device_.quota_of(kernel.app) < 1) {
    throw PreconditionError("app '" + kernel.app + "' has no partition");
  }
  auto& stream = apps_[kernel.app];
  if (!stream.queued.empty() && kernels_[stream.queued.back()].submit > kernel.submit) {
    throw PreconditionError("kernels of '" + kernel.app + "' must be submitted in time order");
  }
  const std::size_t handle = kernels_.size();
  kernels_.push_back(kernel);
  timings_.push_back({});
  state_.push_back(State::queued);
  index_in_app_.push_back(stream.next_index++);
  stream.queued.push_back(handle);
  return handle;
}

std::optional<Nanos> GpuSimulator::next_event_time() const {
  std::optional<Nanos> next;
  if (!running_.empty()) next = std::get<0>(*running_.begin());
  for (const auto& [app, stream] : apps_) {
    if (stream.busy || stream.queued.empty()) continue;
    const Nanos arrival = std::max(kernels_[stream.queued.front()].submit, now_);
    if (!next || arrival < *next) next = arrival;
  }
  return next;
}

std::vector<std::size_t> GpuSimulator::advance_to(Nanos t) {
  std::vector<std::size_t> completed;
  while (true) {
    const auto next = next_event_time();
    if (!next || *next > t) break;
    now_ = *next;
    while (!running_.empty() && std::get<0>(*running_.begin()) == now_) {
      const std::size_t h = std::get<3>(*running_.begin());
      running_.erase(running_.begin());
      state_[h] = State::done;
      if (policy_ == Policy::greedy) free_sms_ += timings_[h].sms_held;
      auto& stream = apps_[kernels_[h].app];
      stream.busy = false;
      stream.free_since = now_;
      completed.push_back(h);
    }
    arrive(now_);
    launch(now_);
  }
  if (t != std::numeric_limits<Nanos>::max() && t > now_) now_ = t;
  return completed;
}

void GpuSimulator::arrive(Nanos t) {
  for (auto& [app, stream] : apps_) {
    if (stream.busy || stream.queued.empty()) continue;
    const std::size_t h = stream.queued.front();
    if (kernels_[h].submit > t) continue;
    stream.queued.pop_front();
    stream.busy = true;
    state_[h] = State::waiting;
    waiting_.emplace(t, kernels_[h].submit, app, index_in_app_[h], h);
  }
}

void GpuSimulator::launch(Nanos t) {
  while (!waiting_.empty()) {
    const std::size_t h = std::get<4>(*waiting_.begin());
    if (policy_ == Policy::greedy && kernels_[h].sm_demand > free_sms_) break;  // head-of-line blocking
    waiting_.erase(waiting_.begin());
    start(h, t);
  }
}

void GpuSimulator::start(std::size_t h, Nanos t) {
  const auto& k = kernels_[h];
  auto& timing = timings_[h];
  timing.start = t;
  timing.end = t + effective_duration(k, device_, policy_);
  if (policy_ == Policy::greedy) {
    timing.sms_held = k.sm_demand;
    free_sms_ -= k.sm_demand;
  } else {
    timing.sms_held = std::min(k.sm_demand, device_.quota_of(k.app));
  }
  state_[h] = State::running;
  running_.emplace(timing.end, k.app, index_in_app_[h], h);
}

void GpuSimulator::cancel_pending(const std::string& app) {
  auto it = apps_.find(app);
  if (it == apps_.end()) return;
  for (auto h : it->second.queued) state_[h] = State::cancelled;
  it->second.queued.clear();
  for (auto w = waiting_.begin(); w != waiting_.end();) {
    if (std::get<2>(*w) == app) {
      state_[std::get<4>(*w)] = State::cancelled;
      it->second.busy = false;
      w = waiting_.erase(w);
    } else {
      ++w;
    }
  }
  launch(now_);
}

bool GpuSimulator::cancel(std::size_t h) {
  if (h >= state_.size()) return false;
  auto& stream = apps_[kernels_[h].app];
  if (state_[h] == State::queued) {
    stream.queued.erase(std::find(stream.queued.begin(), stream.queued.end(), h));
  } else if (state_[h] == State::waiting) {
    for (auto w = waiting_.begin(); w != waiting_.end(); ++w) {
      if (std::get<4>(*w) == h) {
        waiting_.erase(w);
        break;
      }
    }
    stream.busy = false;
    stream.free_since = now_;
  } else {
    return false;
  }
  state_[h] = State::cancelled;
  launch(now_);
  return true;
}

bool GpuSimulator::idle() const {
  if (!running_.empty() || !waiting_.empty()) return false;
  return std::all_of(apps_.begin(), apps_.end(), [](const auto& a) { return a.second.queued.empty(); });
}

SimResult GpuSimulator::result() const {
  SimResult r;
  r.policy = policy_;
  for (std::size_t h = 0; h < kernels_.size(); ++h) {
    if (state_[h] != State::done && state_[h] != State::running) continue;
    r.kernels.push_back(kernels_[h]);
    r.timings.push_back(timings_[h]);
    auto& done = r.app_completion[kernels_[h].app];
    done = std::max(done, timings_[h].end);
  }
  return r;
}

SimResult simulate(const SimDevice& device, const std::vector<SimKernel>& kernels, Policy policy) {
  GpuSimulator sim(device, policy);
  for (const auto& k : kernels) sim.submit(k);
  sim.advance_to(std::numeric_limits<Nanos>::max());
  return sim.result();
}

SimResult exclusive_baseline(const SimDevice& device, const std::vector<SimKernel>& kernels_of_one_app) {
  for (const auto& k : kernels_of_one_app) {
    if (k.app != kernels_of_one_app.front().app) {
      throw PreconditionError("exclusive baseline takes the kernels of a single app");
    }
  }
  SimDevice whole{device.sm_count, {}};
  return simulate(whole, kernels_of_one_app, Policy::greedy);
}

std::vector<MetricSample> synth_utilization(const SimResult& result, const SimDevice& device, Nanos interval,
                                            std::optional<Nanos> horizon) {
  if (interval <= 0) throw PreconditionError("sampling interval must be positive");
  const Nanos end = horizon.value_or(result.makespan());
  const std::size_t buckets = end <= 0 ? 0 : static_cast<std::size_t>((end + interval - 1) / interval);
  std::vector<std::int64_t> reserved(buckets, 0), active(buckets, 0);

  for (std::size_t i = 0; i < result.kernels.size(); ++i) {
    const auto& k = result.kernels[i];
    const auto& t = result.timings[i];
    const std::int64_t reserve =
        result.policy == Policy::static_partition ? device.quota_of(k.app) : t.sms_held;
    const std::int64_t occupy = t.sms_held;
    const Nanos lo = std::max<Nanos>(t.start, 0);
    const Nanos hi = std::min(t.end, end);
    for (Nanos b = lo / interval; lo < hi && b * interval < hi; ++b) {
      const Nanos overlap = std::min(hi, (b + 1) * interval) - std::max(lo, b * interval);
      if (overlap <= 0) continue;
      reserved[b] += reserve * overlap;
      active[b] += occupy * overlap;
    }
  }

  std::vector<MetricSample> out;
  out.reserve(buckets * 2);
  const double denom = static_cast<double>(interval) * device.sm_count;
  for (std::size_t b = 0; b < buckets; ++b) {
    const double t = to_seconds(static_cast<Nanos>(b) * interval);
    out.push_back({t, MetricKind::smact, static_cast<double>(100 * reserved[b]) / denom, "simgpu"});
    out.push_back({t, MetricKind::smocc, static_cast<double>(100 * active[b]) / denom, "simgpu"});
  }
  return out;
}

}  // namespace genaibench
