#include "genaibench/engine.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <limits>
#include <mutex>
#include <queue>
#include <random>
#include <thread>

#include "genaibench/clock.hpp"
#include "genaibench/error.hpp"
#include "genaibench/simgpu.hpp"

namespace genaibench {

namespace {

constexpr Nanos kNever = std::numeric_limits<Nanos>::max();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string setup_id_of(const DagNode& node) {
  return node.server ? Dag::shared_setup_id(*node.server) : Dag::setup_id(node.app_instance());
}

std::string local_host_name() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Serialized sink for events and records; the single point of ordering.
class TraceLog {
 public:
  explicit TraceLog(const RunClock* clock) : clock_(clock) {}

  /// Live: timestamp taken under the lock. Simulated: `t` supplied.
  void event(const std::string& node, Phase phase, std::string detail = {}, Nanos t = -1) {
    std::lock_guard lock(mutex_);
    events_.push_back({node, phase, t >= 0 ? t : clock_->now_ns(), std::move(detail)});
  }
  void records(std::vector<RequestRecord> recs) {
    std::lock_guard lock(mutex_);
    for (auto& r : recs) requests_.push_back(std::move(r));
  }
  void note(std::string text) {
    std::lock_guard lock(mutex_);
    notes_.push_back(std::move(text));
  }
  void move_into(RunTrace& trace) {
    std::lock_guard lock(mutex_);
    trace.events = std::move(events_);
    trace.requests = std::move(requests_);
    trace.notes.insert(trace.notes.end(), notes_.begin(), notes_.end());
  }

 private:
  const RunClock* clock_;
  std::mutex mutex_;
  std::vector<NodeEvent> events_;
  std::vector<RequestRecord> requests_;
  std::vector<std::string> notes_;
};

RunTrace base_trace(const BenchmarkSpec& spec, const Dag& dag, const PolicyContext& ctx, const RunOptions& options) {
  RunTrace trace;
  trace.header.mode = spec.mode;
  trace.header.policy = spec.policy;
  trace.header.seed = spec.seed;
  trace.header.host = options.host.empty() ? local_host_name() : options.host;
  trace.header.sm_count = spec.sm_count;
  trace.header.shares = ctx.shares();
  trace.spec = spec;
  trace.nodes = dag.nodes();
  return trace;
}

void set_status(RunTrace& trace, const WorkflowState& state, bool interrupted) {
  trace.header.status = interrupted ? "interrupted" : state.any_failed() ? "failed" : "complete";
}

// ===================================================================== live

class LiveExecutor {
 public:
  LiveExecutor(const BenchmarkSpec& spec, const Dag& dag, const PolicyContext& ctx, const RunOptions& options)
      : spec_(spec), dag_(dag), ctx_(ctx), options_(options), state_(dag, spec.on_failure), log_(&clock_),
        runs_(dag.size()) {}

  RunTrace run() {
    RunTrace trace = base_trace(spec_, dag_, ctx_, options_);
    trace.header.wall_clock_start = iso8601_now();
    auto monitor = start_monitor(options_.collectors(spec_.sample_interval), spec_.sample_interval, clock_);

    bool aborting = false;
    bool closing = false;
    while (true) {
      if (!aborting && options_.abort.stop_requested()) {
        aborting = true;
        for (auto i : state_.abortable()) stop_or_cancel(i, Reason::abort);
      }
      if (!closing && state_.workflow_complete()) {
        closing = true;
        for (auto i : state_.unfinished_background()) stop_or_cancel(i, Reason::cancel);
      }
      enforce_timeouts();
      dispatch_ready();
      if (state_.all_terminal()) break;
      drain_inbox(std::chrono::milliseconds(50));
    }
    for (auto& r : runs_) {
      if (r.thread.joinable()) r.thread.join();
    }

    auto mon = monitor->stop();
    log_.move_into(trace);
    std::stable_sort(mon.samples.begin(), mon.samples.end(),
                     [](const MetricSample& a, const MetricSample& b) { return a.t < b.t; });
    trace.samples = std::move(mon.samples);
    trace.gaps = std::move(mon.gaps);
    trace.notes.insert(trace.notes.end(), mon.notes.begin(), mon.notes.end());
    set_status(trace, state_, aborting);
    if (aborting) throw InterruptedError(std::move(trace));
    return trace;
  }

 private:
  enum class Reason : int { none, cancel, timeout, abort };

  struct NodeRun {
    std::jthread thread;
    std::atomic<int> reason{0};
    double started = 0;
  };

  struct Server {
    std::shared_ptr<ServerHandle> handle;
    std::shared_ptr<Adapter> adapter;
  };

  struct Done {
    std::size_t node;
    Phase phase;
  };

  void stop_or_cancel(std::size_t i, Reason why) {
    const auto st = state_.state(i);
    if (st == NodeState::pending) {
      for (auto c : state_.cancel_pending(i)) log_.event(dag_.node(c).id, Phase::cancelled, reason_text(why));
    } else if (st == NodeState::dispatched || st == NodeState::running) {
      runs_[i].reason = static_cast<int>(why);
      runs_[i].thread.request_stop();
    }
  }

  static std::string reason_text(Reason why) {
    switch (why) {
      case Reason::cancel: return "workflow complete";
      case Reason::abort: return "interrupted";
      case Reason::timeout: return "timeout";
      default: return {};
    }
  }

  void enforce_timeouts() {
    const double now = clock_.now();
    for (std::size_t i = 0; i < dag_.size(); ++i) {
      if (dag_.node(i).kind != NodeKind::exec || state_.state(i) != NodeState::running) continue;
      if (runs_[i].reason != 0) continue;
      const auto& task = spec_.task_of(*spec_.find_node(dag_.node(i).app_instance()));
      if (now - runs_[i].started > task.timeout) {
        runs_[i].reason = static_cast<int>(Reason::timeout);
        runs_[i].thread.request_stop();
      }
    }
  }

  void dispatch_ready() {
    for (auto i : state_.ready()) {
      const auto& node = dag_.node(i);
      if (node.kind == NodeKind::exec && spec_.max_concurrency > 0 &&
          state_.in_flight_execs() >= static_cast<std::size_t>(spec_.max_concurrency)) {
        continue;
      }
      log_.event(node.id, Phase::dispatched);
      state_.mark_dispatched(i);
      state_.mark_running(i);
      runs_[i].started = clock_.now();
      runs_[i].thread = std::jthread([this, i](std::stop_token stop) { body(i, stop); });
    }
  }

  void drain_inbox(std::chrono::milliseconds wait) {
    std::deque<Done> got;
    {
      std::unique_lock lock(inbox_mutex_);
      inbox_cv_.wait_for(lock, wait, [&] { return !inbox_.empty(); });
      got.swap(inbox_);
    }
    for (const auto& d : got) {
      if (runs_[d.node].thread.joinable()) runs_[d.node].thread.join();
      std::vector<std::size_t> cascade;
      if (d.phase == Phase::finished) {
        state_.mark_finished(d.node);
      } else if (d.phase == Phase::cancelled) {
        cascade = state_.mark_cancelled(d.node);
      } else {
        std::vector<std::size_t> to_stop;
        cascade = state_.mark_failed(d.node, to_stop);
        for (auto s : to_stop) stop_or_cancel(s, Reason::abort);
      }
      for (auto c : cascade) log_.event(dag_.node(c).id, Phase::cancelled, "dependency did not finish");
    }
  }

  void body(std::size_t i, std::stop_token stop) {
    const auto& node = dag_.node(i);
    log_.event(node.id, Phase::started);
    Phase outcome = Phase::finished;
    std::string detail;
    try {
      switch (node.kind) {
        case NodeKind::setup: do_setup(node); break;
        case NodeKind::exec: do_exec(i, node, stop); break;
        case NodeKind::cleanup: do_cleanup(node); break;
      }
    } catch (const std::exception& e) {
      outcome = Phase::failed;
      detail = e.what();
    }
    const auto why = static_cast<Reason>(runs_[i].reason.load());
    if (why == Reason::timeout) {
      outcome = Phase::failed;
      detail = "timeout";
    } else if (why == Reason::cancel || why == Reason::abort) {
      outcome = Phase::cancelled;
      detail = reason_text(why);
    }
    log_.event(node.id, outcome, detail);
    {
      std::lock_guard lock(inbox_mutex_);
      inbox_.push_back({i, outcome});
    }
    inbox_cv_.notify_one();
  }

  std::vector<TaskDefinition> tasks_of(const DagNode& node) const {
    std::vector<TaskDefinition> out;
    for (const auto& inst : node.instances) out.push_back(spec_.task_of(*spec_.find_node(inst)));
    return out;
  }

  void do_setup(const DagNode& node) {
    const auto tasks = tasks_of(node);
    const auto& lead = tasks.front();
    const std::string unit = node.server ? "server:" + *node.server : node.app_instance();
    Placement placement;
    placement.device = lead.device;
    placement.kv_cache_on_cpu = lead.kv_cache == KvCache::cpu;
    if (lead.device != Device::cpu) {
      placement.partition_share = ctx_.share_of(unit);
      SimDevice unused;
      const auto binding = apply_placement(unit, placement.partition_share, spec_.policy, Mode::live, unused,
                                           options_.partition_probe);
      placement.env = std::get<EnvSpec>(binding).vars;
    }
    Server server;
    server.adapter = options_.adapters.get(lead.app_kind);
    if (node.server) {
      server.handle = shared_setup(tasks, placement, *server.adapter);
    } else {
      server.handle = server.adapter->setup(lead, placement);
      server.handle->acquire();
    }
    std::lock_guard lock(servers_mutex_);
    servers_[node.id] = std::move(server);
  }

  void do_exec(std::size_t i, const DagNode& node, std::stop_token stop) {
    const auto& task = spec_.task_of(*spec_.find_node(node.app_instance()));
    std::shared_ptr<ServerHandle> handle;
    {
      std::lock_guard lock(servers_mutex_);
      handle = servers_.at(setup_id_of(node)).handle;
    }
    auto adapter = options_.adapters.get(task.app_kind);
    RequestContext ctx;
    ctx.instance = node.app_instance();
    ctx.clock = &clock_;
    ctx.seed = splitmix64(spec_.seed ^ static_cast<std::uint64_t>(i));
    ctx.stop = stop;
    log_.records(adapter->execute(*handle, task, ctx));
  }

  void do_cleanup(const DagNode& node) {
    Server server;
    {
      std::lock_guard lock(servers_mutex_);
      auto it = servers_.find(setup_id_of(node));
      if (it == servers_.end()) return;
      server = it->second;
    }
    bool released = false;
    while (!released && server.handle->refs() > 0) released = release_shared(*server.handle, *server.adapter);
    if (!released) server.adapter->cleanup(*server.handle);
  }

  const BenchmarkSpec& spec_;
  const Dag& dag_;
  const PolicyContext& ctx_;
  const RunOptions& options_;
  RunClock clock_;
  WorkflowState state_;
  TraceLog log_;
  std::vector<NodeRun> runs_;

  std::mutex servers_mutex_;
  std::map<std::string, Server> servers_;

  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<Done> inbox_;
};

// ================================================================ simulated

class SimExecutor {
 public:
  SimExecutor(const BenchmarkSpec& spec, const Dag& dag, const PolicyContext& ctx, const RunOptions& options)
      : spec_(spec), dag_(dag), ctx_(ctx), options_(options), state_(dag, spec.on_failure), log_(nullptr),
        rng_(spec.seed), execs_(dag.size()) {
    device_.sm_count = spec.sm_count;
    for (const auto& [unit, share] : ctx.shares()) {
      apply_placement(unit, share, spec.policy, Mode::simulated, device_);
    }
    sims_.emplace_back(device_, spec.policy);
    // CPU-placed apps: a device so wide that apps never contend.
    sims_.emplace_back(SimDevice{1 << 30, {}}, Policy::greedy);
  }

  RunTrace run() {
    RunTrace trace = base_trace(spec_, dag_, ctx_, options_);
    bool aborting = false;
    bool closing = false;
    while (true) {
      if (!aborting && options_.abort.stop_requested()) {
        aborting = true;
        for (auto i : state_.abortable()) cancel_node(i, "interrupted");
      }
      if (!closing && state_.workflow_complete()) {
        closing = true;
        for (auto i : state_.unfinished_background()) cancel_node(i, "workflow complete");
      }
      dispatch_ready();
      if (state_.all_terminal()) break;
      if (!step()) {
        throw Error("simulation stalled with unfinished nodes");
      }
    }

    log_.move_into(trace);
    const Nanos interval = to_nanos(spec_.sample_interval);
    if (interval > 0 && now_ > 0) {
      trace.samples = synth_utilization(sims_[0].result(), device_, interval, now_);
      for (auto& s : trace.samples) s.source = "simgpu";
    }
    set_status(trace, state_, aborting);
    if (aborting) throw InterruptedError(std::move(trace));
    return trace;
  }

 private:
  enum class TimerKind { node_done, segment, next_request, timeout };

  struct Timer {
    Nanos t;
    std::uint64_t seq;
    TimerKind kind;
    std::size_t node;
    int a = 0;  // request number (generation guard) or segment index
    bool operator>(const Timer& o) const { return std::tie(t, seq) > std::tie(o.t, o.seq); }
  };

  // What a finished kernel means for its request.
  struct KernelTag {
    std::size_t node;
    int request;
    int group;  // -1: not a group end
    int segment = -1;
  };

  struct ExecRun {
    const TaskDefinition* task = nullptr;
    std::string unit;
    int sim = 0;
    int request = 0;  // current request number
    Nanos request_start = 0;
    std::vector<Nanos> group_ends;
    int groups = 0;
    int prologue_groups = 0;
    int segments_done = 0;
    std::vector<std::pair<int, std::size_t>> outstanding;  // (sim, handle)
    std::map<int, Nanos> segment_submit;
  };

  void add_timer(Nanos t, TimerKind kind, std::size_t node, int a = 0) {
    timers_.push({t, seq_++, kind, node, a});
  }

  const TaskDefinition& task_of(const DagNode& node) const {
    return spec_.task_of(*spec_.find_node(node.app_instance()));
  }

  Nanos jittered(Nanos d, double jitter) {
    if (jitter <= 0) return d;
    std::uniform_real_distribution<double> u(-jitter, jitter);
    return std::max<Nanos>(1, std::llround(static_cast<double>(d) * (1.0 + u(rng_))));
  }

  /// Advances to the next event and handles it. False when nothing is left.
  bool step() {
    Nanos next = kNever;
    for (const auto& s : sims_) {
      if (auto t = s.next_event_time()) next = std::min(next, *t);
    }
    if (!timers_.empty()) next = std::min(next, timers_.top().t);
    if (next == kNever) return false;
    now_ = next;
    for (int s = 0; s < static_cast<int>(sims_.size()); ++s) {
      for (auto h : sims_[static_cast<std::size_t>(s)].advance_to(now_)) on_kernel_done(s, h);
    }
    while (!timers_.empty() && timers_.top().t == now_) {
      const Timer t = timers_.top();
      timers_.pop();
      on_timer(t);
    }
    return true;
  }

  void dispatch_ready() {
    for (auto i : state_.ready()) {
      const auto& node = dag_.node(i);
      if (node.kind == NodeKind::exec && spec_.max_concurrency > 0 &&
          state_.in_flight_execs() >= static_cast<std::size_t>(spec_.max_concurrency)) {
        continue;
      }
      log_.event(node.id, Phase::dispatched, {}, now_);
      state_.mark_dispatched(i);
      log_.event(node.id, Phase::started, {}, now_);
      state_.mark_running(i);
      if (node.kind == NodeKind::exec) {
        start_exec(i);
      } else {
        const auto& p = task_of(node).profile;
        add_timer(now_ + (node.kind == NodeKind::setup ? p.setup : p.cleanup), TimerKind::node_done, i);
      }
    }
  }

  void start_exec(std::size_t i) {
    const auto& node = dag_.node(i);
    auto& e = execs_[i];
    e.task = &task_of(node);
    e.unit = execution_unit(spec_, *spec_.find_node(node.app_instance()));
    e.sim = e.task->device == Device::cpu ? 1 : 0;
    e.request = 0;
    add_timer(now_ + to_nanos(e.task->timeout), TimerKind::timeout, i);
    start_request(i);
  }

  std::size_t submit(ExecRun& e, const KernelShape& k, Nanos at) {
    auto& sim = sims_[static_cast<std::size_t>(e.sim)];
    const int sm_count = e.sim == 0 ? device_.sm_count : 1;
    SimKernel kernel{e.unit, at, jittered(k.duration, e.task->profile.jitter), sms_for_percent(k.sm_demand, sm_count)};
    const auto h = sim.submit(kernel);
    e.outstanding.emplace_back(e.sim, h);
    return h;
  }

  /// Submits a group of kernel shapes; tags the last kernel.
  void submit_group(std::size_t i, const std::vector<KernelShape>& shapes, Nanos at, int group, int segment) {
    auto& e = execs_[i];
    std::optional<std::size_t> last;
    for (const auto& k : shapes) {
      for (int r = 0; r < k.repeat; ++r) last = submit(e, k, at);
    }
    if (last) tags_[{e.sim, *last}] = {i, e.request, group, segment};
  }

  void start_request(std::size_t i) {
    auto& e = execs_[i];
    if (e.request >= e.task->num_requests) {
      finish_exec(i, Phase::finished, {});
      return;
    }
    e.request_start = now_;
    e.outstanding.clear();
    e.segments_done = 0;
    e.segment_submit.clear();
    const auto& p = e.task->profile;

    if (e.task->app_kind == AppKind::live_captions) {
      const int segments = std::max(p.units, 0);
      if (segments == 0 || p.unit.empty()) {
        ++e.request;
        start_request(i);
        return;
      }
      for (int s = 0; s < segments; ++s) add_timer(now_ + s * p.period, TimerKind::segment, i, s);
      return;
    }

    const int units = e.task->app_kind == AppKind::imagegen ? e.task->steps.value_or(p.units) : p.units;
    e.prologue_groups = p.prologue.empty() ? 0 : 1;
    e.groups = e.prologue_groups + (p.unit.empty() ? 0 : units);
    e.group_ends.assign(static_cast<std::size_t>(e.groups), -1);
    if (e.groups == 0) {
      complete_request(i);
      return;
    }
    if (e.prologue_groups) submit_group(i, p.prologue, now_, 0, -1);
    for (int u = 0; u < units && !p.unit.empty(); ++u) submit_group(i, p.unit, now_, e.prologue_groups + u, -1);
  }

  void on_kernel_done(int sim, std::size_t h) {
    auto it = tags_.find({sim, h});
    if (it == tags_.end()) return;
    const KernelTag tag = it->second;
    tags_.erase(it);
    auto& e = execs_[tag.node];
    if (state_.state(tag.node) != NodeState::running || tag.request != e.request) return;

    if (tag.segment >= 0) {
      RequestRecord r = make_record(tag.node);
      r.request_id = std::to_string(e.request) + "." + std::to_string(tag.segment);
      r.segment_index = tag.segment;
      r.t_submit = to_seconds(e.segment_submit.at(tag.segment));
      r.t_complete = r.t_first_output = to_seconds(now_);
      r.segment_latency = to_seconds(now_ - e.segment_submit.at(tag.segment));
      log_.records({std::move(r)});
      if (++e.segments_done == e.task->profile.units) {
        const Nanos paced_end = e.request_start + e.task->profile.units * e.task->profile.period;
        ++e.request;
        e.outstanding.clear();
        if (paced_end > now_) {
          add_timer(paced_end, TimerKind::next_request, tag.node, e.request);
        } else {
          start_request(tag.node);
        }
      }
      return;
    }

    e.group_ends[static_cast<std::size_t>(tag.group)] = now_;
    if (tag.group == e.groups - 1) complete_request(tag.node);
  }

  RequestRecord make_record(std::size_t i) const {
    RequestRecord r;
    r.task_name = execs_[i].task->name;
    r.instance = dag_.node(i).app_instance();
    return r;
  }

  void complete_request(std::size_t i) {
    auto& e = execs_[i];
    RequestRecord r = make_record(i);
    r.request_id = std::to_string(e.request);
    r.t_submit = to_seconds(e.request_start);
    r.t_complete = to_seconds(now_);
    r.t_first_output = r.t_complete;
    std::vector<Nanos> unit_ends(e.group_ends.begin() + e.prologue_groups, e.group_ends.end());
    switch (e.task->app_kind) {
      case AppKind::chatbot:
        for (auto t : unit_ends) r.token_times.push_back(to_seconds(t));
        if (!r.token_times.empty()) r.t_first_output = r.token_times.front();
        break;
      case AppKind::imagegen: {
        Nanos prev = e.prologue_groups ? e.group_ends.front() : e.request_start;
        for (auto t : unit_ends) {
          r.step_times.push_back(to_seconds(t - prev));
          prev = t;
        }
        if (!unit_ends.empty()) r.t_first_output = to_seconds(unit_ends.front());
        break;
      }
      default:
        break;
    }
    log_.records({std::move(r)});
    ++e.request;
    e.outstanding.clear();
    start_request(i);
  }

  void on_timer(const Timer& t) {
    switch (t.kind) {
      case TimerKind::node_done:
        if (state_.state(t.node) == NodeState::running) {
          log_.event(dag_.node(t.node).id, Phase::finished, {}, now_);
          state_.mark_finished(t.node);
        }
        break;
      case TimerKind::segment: {
        auto& e = execs_[t.node];
        if (state_.state(t.node) != NodeState::running) break;
        e.segment_submit[t.a] = now_;
        submit_group(t.node, e.task->profile.unit, now_, -1, t.a);
        break;
      }
      case TimerKind::next_request:
        if (state_.state(t.node) == NodeState::running && execs_[t.node].request == t.a) start_request(t.node);
        break;
      case TimerKind::timeout:
        if (state_.state(t.node) == NodeState::running) {
          emit_partial(t.node, "timeout");
          drop_outstanding(t.node);
          finish_exec(t.node, Phase::failed, "timeout");
        }
        break;
    }
  }

  void emit_partial(std::size_t i, const std::string& why) {
    auto& e = execs_[i];
    if (e.request >= e.task->num_requests) return;
    RequestRecord r = make_record(i);
    r.request_id = std::to_string(e.request);
    r.t_submit = to_seconds(e.request_start);
    r.t_first_output = r.t_complete = to_seconds(now_);
    r.ok = false;
    r.detail = why;
    log_.records({std::move(r)});
  }

  void drop_outstanding(std::size_t i) {
    auto& e = execs_[i];
    for (auto [s, h] : e.outstanding) {
      sims_[static_cast<std::size_t>(s)].cancel(h);
      tags_.erase({s, h});
    }
    e.outstanding.clear();
    ++e.request;  // invalidates pending timers and tags of this request
  }

  void finish_exec(std::size_t i, Phase phase, const std::string& detail) {
    log_.event(dag_.node(i).id, phase, detail, now_);
    std::vector<std::size_t> cascade;
    if (phase == Phase::finished) {
      state_.mark_finished(i);
    } else if (phase == Phase::cancelled) {
      cascade = state_.mark_cancelled(i);
    } else {
      std::vector<std::size_t> to_stop;
      cascade = state_.mark_failed(i, to_stop);
      for (auto s : to_stop) cancel_node(s, "run aborted");
    }
    for (auto c : cascade) log_.event(dag_.node(c).id, Phase::cancelled, "dependency did not finish", now_);
  }

  void cancel_node(std::size_t i, const std::string& why) {
    const auto st = state_.state(i);
    if (st == NodeState::pending) {
      for (auto c : state_.cancel_pending(i)) log_.event(dag_.node(c).id, Phase::cancelled, why, now_);
    } else if (st == NodeState::running && dag_.node(i).kind == NodeKind::exec) {
      emit_partial(i, "cancelled");
      drop_outstanding(i);
      finish_exec(i, Phase::cancelled, why);
    }
  }

  const BenchmarkSpec& spec_;
  const Dag& dag_;
  const PolicyContext& ctx_;
  const RunOptions& options_;
  WorkflowState state_;
  TraceLog log_;
  std::mt19937_64 rng_;
  SimDevice device_;
  std::vector<GpuSimulator> sims_;
  std::vector<ExecRun> execs_;
  std::map<std::pair<int, std::size_t>, KernelTag> tags_;
  std::priority_queue<Timer, std::vector<Timer>, std::greater<>> timers_;
  std::uint64_t seq_ = 0;
  Nanos now_ = 0;
};

}  // namespace

// ============================================================ InterruptedError

InterruptedError::InterruptedError(RunTrace partial)
    : Error("run interrupted"), trace_(std::make_shared<RunTrace>(std::move(partial))) {}

// =============================================================== WorkflowState

WorkflowState::WorkflowState(const Dag& dag, FailurePolicy on_failure)
    : dag_(dag), on_failure_(on_failure), state_(dag.size(), NodeState::pending), setup_of_(dag.size(), 0) {
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& n = dag.node(i);
    if (n.kind == NodeKind::setup) {
      setup_of_[i] = i;
    } else if (auto s = dag.index_of(setup_id_of(n))) {
      setup_of_[i] = *s;
    }
  }
}

bool WorkflowState::terminal(std::size_t i) const {
  const auto s = state_[i];
  return s == NodeState::finished || s == NodeState::failed || s == NodeState::cancelled;
}

std::vector<std::size_t> WorkflowState::ready() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    if (state_[i] != NodeState::pending) continue;
    const auto& preds = dag_.preds(i);
    const bool ok = std::all_of(preds.begin(), preds.end(), [&](std::size_t p) {
      return dag_.node(i).kind == NodeKind::cleanup ? terminal(p) : state_[p] == NodeState::finished;
    });
    if (!ok) continue;
    if (dag_.node(i).kind == NodeKind::cleanup && state_[setup_of_[i]] != NodeState::finished) continue;
    out.push_back(i);
  }
  return out;
}

void WorkflowState::mark_dispatched(std::size_t i) { state_[i] = NodeState::dispatched; }
void WorkflowState::mark_running(std::size_t i) { state_[i] = NodeState::running; }
void WorkflowState::mark_finished(std::size_t i) { state_[i] = NodeState::finished; }

std::vector<std::size_t> WorkflowState::mark_failed(std::size_t i, std::vector<std::size_t>& to_stop) {
  state_[i] = NodeState::failed;
  any_failed_ = true;
  if (on_failure_ == FailurePolicy::abort_run) {
    std::vector<std::size_t> cancelled;
    for (auto j : abortable()) {
      if (state_[j] == NodeState::pending) {
        state_[j] = NodeState::cancelled;
        cancelled.push_back(j);
      } else {
        to_stop.push_back(j);
      }
    }
    settle_cleanups(cancelled);
    std::sort(cancelled.begin(), cancelled.end());
    return cancelled;
  }
  return cascade_from(i);
}

std::vector<std::size_t> WorkflowState::cancel_pending(std::size_t i) {
  if (state_[i] != NodeState::pending) return {};
  state_[i] = NodeState::cancelled;
  auto out = cascade_from(i);
  out.insert(out.begin(), i);
  return out;
}

std::vector<std::size_t> WorkflowState::mark_cancelled(std::size_t i) {
  state_[i] = NodeState::cancelled;
  return cascade_from(i);
}

std::vector<std::size_t> WorkflowState::cascade_from(std::size_t i) {
  std::vector<std::size_t> cancelled;
  std::vector<std::size_t> work{i};
  const bool from_setup = dag_.node(i).kind == NodeKind::setup;
  while (!work.empty()) {
    const auto u = work.back();
    work.pop_back();
    for (auto v : dag_.succs(u)) {
      if (dag_.node(v).kind != NodeKind::exec || state_[v] != NodeState::pending) continue;
      if (!from_setup && dag_.node(u).kind == NodeKind::setup) continue;
      state_[v] = NodeState::cancelled;
      cancelled.push_back(v);
      work.push_back(v);
    }
  }
  // A setup none of whose execs will run is not needed.
  for (std::size_t s = 0; s < dag_.size(); ++s) {
    if (dag_.node(s).kind != NodeKind::setup || state_[s] != NodeState::pending) continue;
    const auto& execs = dag_.succs(s);
    if (!execs.empty() && std::all_of(execs.begin(), execs.end(), [&](std::size_t e) {
          return state_[e] == NodeState::cancelled || state_[e] == NodeState::failed;
        })) {
      state_[s] = NodeState::cancelled;
      cancelled.push_back(s);
    }
  }
  settle_cleanups(cancelled);
  std::sort(cancelled.begin(), cancelled.end());
  return cancelled;
}

void WorkflowState::settle_cleanups(std::vector<std::size_t>& cancelled) {
  for (std::size_t c = 0; c < dag_.size(); ++c) {
    if (dag_.node(c).kind != NodeKind::cleanup || state_[c] != NodeState::pending) continue;
    const auto s = state_[setup_of_[c]];
    if (s == NodeState::failed || s == NodeState::cancelled) {
      state_[c] = NodeState::cancelled;
      cancelled.push_back(c);
    }
  }
}

bool WorkflowState::workflow_complete() const {
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    const auto& n = dag_.node(i);
    if (n.kind == NodeKind::exec && !n.background && !terminal(i)) return false;
  }
  return true;
}

bool WorkflowState::all_terminal() const {
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    if (!terminal(i)) return false;
  }
  return true;
}

std::vector<std::size_t> WorkflowState::unfinished_background() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    const auto& n = dag_.node(i);
    if (n.kind == NodeKind::exec && n.background && !terminal(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> WorkflowState::abortable() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    if (terminal(i)) continue;
    const auto kind = dag_.node(i).kind;
    if (kind == NodeKind::cleanup) continue;
    if (kind == NodeKind::setup && state_[i] != NodeState::pending) continue;
    out.push_back(i);
  }
  return out;
}

std::size_t WorkflowState::in_flight_execs() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    if (dag_.node(i).kind == NodeKind::exec &&
        (state_[i] == NodeState::dispatched || state_[i] == NodeState::running)) {
      ++n;
    }
  }
  return n;
}

// ===================================================================== run

RunTrace run(const BenchmarkSpec& spec, const RunOptions& options) {
  const auto violations = validate_spec(spec);
  if (!violations.empty()) {
    throw PreconditionError("spec is invalid: " + violations.front().subject + ": " + violations.front().message);
  }
  const Dag dag = build_dag(spec);
  validate_dag(dag);
  const PolicyContext ctx = make_policy_context(spec);

  if (spec.mode == Mode::live) {
    const auto missing = check_live_requirements(spec);
    if (!missing.empty()) throw PreconditionError(missing.front().subject + ": " + missing.front().message);
    if (spec.policy == Policy::static_partition && !ctx.shares().empty() &&
        !(options.partition_probe && options.partition_probe())) {
      throw UnsupportedPlatform("GPU partitioning requested but no MPS control daemon is running");
    }
    return LiveExecutor(spec, dag, ctx, options).run();
  }
  return SimExecutor(spec, dag, ctx, options).run();
}

}  // namespace genaibench
