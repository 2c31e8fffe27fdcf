#include "genaibench/monitor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <numeric>
#include <sstream>

#include "genaibench/error.hpp"
#include "genaibench/stats.hpp"

namespace genaibench {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool to_double(const std::string& text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

std::vector<std::uint64_t> aggregate_cpu_fields(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] != "cpu") continue;
    std::vector<std::uint64_t> fields;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(tok[i].data(), tok[i].data() + tok[i].size(), v);
      if (ec != std::errc{} || ptr != tok[i].data() + tok[i].size()) {
        throw ParseError("malformed /proc/stat field '" + tok[i] + "'");
      }
      fields.push_back(v);
    }
    if (fields.size() < 4) throw ParseError("aggregate cpu line has fewer than 4 fields");
    return fields;
  }
  throw ParseError("no aggregate 'cpu' line in /proc/stat text");
}

// Rounds to 1e-9.
double fraction_to_percent(double v) { return std::round(v * 100.0 * 1e9) / 1e9; }

}  // namespace

// ------------------------------------------------------------------ monitor

MonitorHandle::MonitorHandle(std::vector<std::unique_ptr<Collector>> collectors, double interval,
                             const RunClock& clock)
    : interval_(interval), clock_(clock) {
  for (auto& c : collectors) {
    try {
      c->init();
      collectors_.push_back(std::move(c));
    } catch (const CollectorInitError& e) {
      report_.notes.push_back("collector '" + c->id() + "' disabled: " + e.what());
    }
  }
  for (auto& c : collectors_) {
    threads_.emplace_back([this, &c](std::stop_token stop) { run_collector(*c, stop); });
  }
}

MonitorHandle::~MonitorHandle() { stop(); }

void MonitorHandle::run_collector(Collector& collector, std::stop_token stop) {
  std::mutex m;
  std::condition_variable_any cv;
  const double t0 = clock_.now();
  long slot = 0;
  bool warned_order = false;
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(m);
      cv.wait_until(lock, stop, clock_.at(t0 + static_cast<double>(slot) * interval_), [] { return false; });
    }
    if (stop.stop_requested()) break;

    const double now = clock_.now();
    std::vector<MetricSample> got;
    std::string failure;
    try {
      got = collector.poll(now);
    } catch (const std::exception& e) {
      failure = e.what();
    }

    const double after = clock_.now();
    long next = static_cast<long>(std::ceil((after - t0) / interval_ - 1e-9));
    next = std::max(next, slot + 1);

    std::lock_guard lock(sink_mutex_);
    if (!failure.empty()) {
      report_.gaps.push_back({t0 + static_cast<double>(slot) * interval_, collector.id()});
      report_.notes.push_back("collector '" + collector.id() + "' poll failed: " + failure);
    }
    std::optional<double> smact, smocc;
    for (auto& s : got) {
      if (s.source.empty()) s.source = collector.id();
      if (s.kind == MetricKind::smact) smact = s.value;
      if (s.kind == MetricKind::smocc) smocc = s.value;
      report_.samples.push_back(std::move(s));
    }
    if (smact && smocc && *smocc > *smact + 1e-9 && !warned_order) {
      warned_order = true;
      report_.notes.push_back("data quality: '" + collector.id() + "' reported SMOCC above SMACT at t=" +
                              format_double(now));
    }
    for (long missed = slot + 1; missed < next; ++missed) {
      report_.gaps.push_back({t0 + static_cast<double>(missed) * interval_, collector.id()});
    }
    slot = next;
  }
}

MonitorReport MonitorHandle::stop() {
  if (stopped_) return {};
  stopped_ = true;
  for (auto& t : threads_) t.request_stop();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  for (auto& c : collectors_) c->stop();
  std::lock_guard lock(sink_mutex_);
  return std::move(report_);
}

std::unique_ptr<MonitorHandle> start_monitor(std::vector<std::unique_ptr<Collector>> collectors, double interval,
                                             const RunClock& clock) {
  if (!(interval > 0)) throw PreconditionError("sample interval must be positive");
  return std::make_unique<MonitorHandle>(std::move(collectors), interval, clock);
}

// ------------------------------------------------------------------ parsers

double parse_proc_stat(const std::string& before, const std::string& after) {
  const auto a = aggregate_cpu_fields(before);
  const auto b = aggregate_cpu_fields(after);
  if (a.size() != b.size()) throw ParseError("/proc/stat snapshots have different field counts");
  auto idle = [](const std::vector<std::uint64_t>& f) { return f[3] + (f.size() > 4 ? f[4] : 0); };
  auto total = [](const std::vector<std::uint64_t>& f) {
    return std::accumulate(f.begin(), f.end(), std::uint64_t{0});
  };
  if (total(b) < total(a) || idle(b) < idle(a)) throw ParseError("/proc/stat counters went backwards");
  const auto d_total = total(b) - total(a);
  const auto d_idle = idle(b) - idle(a);
  if (d_total == 0) throw ParseError("no jiffies elapsed between snapshots");
  return 100.0 * (1.0 - static_cast<double>(d_idle) / static_cast<double>(d_total));
}

std::vector<std::string> default_dcgm_columns() { return {"SMACT", "SMOCC", "DRAMA"}; }

std::vector<MetricSample> parse_dcgm_line(const std::string& line, double t, const std::vector<std::string>& columns,
                                          const std::string& source) {
  auto tok = split_ws(line);
  if (tok.empty() || tok[0].starts_with("#") || tok[0] == "ID") return {};
  // "GPU 0 v1 v2 ..." -> values start after the entity id
  std::size_t first = 0;
  if (tok[0] == "GPU" || tok[0] == "GPU-I" || tok[0] == "GPU-CI") first = 2;
  if (tok.size() < first) throw ParseError("truncated dcgmi line: '" + line + "'");
  const std::size_t n = tok.size() - first;
  if (n != columns.size()) {
    throw ParseError("dcgmi line has " + std::to_string(n) + " values for " + std::to_string(columns.size()) +
                     " columns: '" + line + "'");
  }
  std::vector<MetricSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& text = tok[first + i];
    if (text == "N/A") continue;
    double v = 0;
    if (!to_double(text, v)) throw ParseError("malformed dcgmi value '" + text + "'");
    const auto& col = columns[i];
    if (col == "SMACT") {
      out.push_back({t, MetricKind::smact, fraction_to_percent(v), source});
    } else if (col == "SMOCC") {
      out.push_back({t, MetricKind::smocc, fraction_to_percent(v), source});
    } else if (col == "DRAMA") {
      out.push_back({t, MetricKind::gpu_mem_bw, fraction_to_percent(v), source});
    } else if (col == "FBUSD") {
      out.push_back({t, MetricKind::gpu_mem_used, v / 1024.0, source});
    } else if (col == "POWER") {
      out.push_back({t, MetricKind::power_gpu, v, source});
    }
  }
  return out;
}

std::vector<MetricSample> DcgmLineParser::feed(const std::string& line, double t) {
  auto tok = split_ws(line);
  if (!tok.empty() && tok[0] == "#Entity") {
    columns_.assign(tok.begin() + 1, tok.end());
    return {};
  }
  try {
    return parse_dcgm_line(line, t, columns_);
  } catch (const ParseError&) {
    ++skipped_;
    return {};
  }
}

std::optional<double> parse_pcm_memory_line(const std::string& line) {
  static const std::string key = "System Memory Throughput(MB/s):";
  const auto pos = line.find(key);
  if (pos == std::string::npos) return std::nullopt;
  auto tok = split_ws(line.substr(pos + key.size()));
  double v = 0;
  if (tok.empty() || !to_double(tok[0], v)) throw ParseError("malformed pcm-memory line: '" + line + "'");
  return v / 1000.0;
}

std::vector<MetricSample> parse_nvsmi_line(const std::string& line, double t, const std::string& source) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string f;
  while (std::getline(in, f, ',')) {
    auto tok = split_ws(f);
    fields.push_back(tok.empty() ? "" : tok[0]);
  }
  if (fields.size() != 2) throw ParseError("expected 'power, memory' from nvidia-smi: '" + line + "'");
  std::vector<MetricSample> out;
  double v = 0;
  if (fields[0] != "[N/A]") {
    if (!to_double(fields[0], v)) throw ParseError("malformed power value '" + fields[0] + "'");
    out.push_back({t, MetricKind::power_gpu, v, source});
  }
  if (fields[1] != "[N/A]") {
    if (!to_double(fields[1], v)) throw ParseError("malformed memory value '" + fields[1] + "'");
    out.push_back({t, MetricKind::gpu_mem_used, v / 1024.0, source});
  }
  return out;
}

double rapl_power_watts(std::uint64_t before_uj, std::uint64_t after_uj, double dt_seconds,
                        std::uint64_t max_range_uj) {
  if (!(dt_seconds > 0)) throw PreconditionError("RAPL interval must be positive");
  const std::uint64_t delta = after_uj >= before_uj ? after_uj - before_uj : max_range_uj - before_uj + after_uj;
  return static_cast<double>(delta) / 1e6 / dt_seconds;
}

// ------------------------------------------------------------------ summary

std::optional<Summary> summarize(const std::vector<MetricSample>& samples, MetricKind kind,
                                 std::optional<TimeWindow> window) {
  std::vector<double> values;
  for (const auto& s : samples) {
    if (s.kind != kind) continue;
    if (window && (s.t < window->begin || s.t > window->end)) continue;
    values.push_back(s.value);
  }
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  Summary out;
  out.count = values.size();
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  out.p50 = nearest_rank(values, 50);
  out.p95 = nearest_rank(values, 95);
  out.max = values.back();
  return out;
}

// --------------------------------------------------------------- collectors

FunctionCollector::FunctionCollector(std::string id, std::vector<MetricKind> kinds, PollFn fn)
    : id_(std::move(id)), kinds_(std::move(kinds)), fn_(std::move(fn)) {}

ProcStatCollector::ProcStatCollector(std::filesystem::path stat, std::filesystem::path meminfo)
    : stat_path_(std::move(stat)), meminfo_path_(std::move(meminfo)) {}

void ProcStatCollector::init() {
  previous_ = read_file(stat_path_);
  if (previous_.empty()) throw CollectorInitError("cannot read " + stat_path_.string());
  try {
    aggregate_cpu_fields(previous_);
  } catch (const ParseError& e) {
    throw CollectorInitError(e.what());
  }
}

std::vector<MetricSample> ProcStatCollector::poll(double now) {
  std::vector<MetricSample> out;
  auto current = read_file(stat_path_);
  try {
    out.push_back({now, MetricKind::cpu_util, parse_proc_stat(previous_, current), id()});
  } catch (const ParseError&) {
    // no jiffies elapsed yet; next poll covers the span
    return out;
  }
  previous_ = std::move(current);

  std::istringstream mem(read_file(meminfo_path_));
  std::string line;
  std::optional<double> total_kb, avail_kb;
  while (std::getline(mem, line)) {
    auto tok = split_ws(line);
    double v = 0;
    if (tok.size() < 2 || !to_double(tok[1], v)) continue;
    if (tok[0] == "MemTotal:") total_kb = v;
    if (tok[0] == "MemAvailable:") avail_kb = v;
  }
  if (total_kb && avail_kb) {
    out.push_back({now, MetricKind::cpu_mem_used, (*total_kb - *avail_kb) / (1024.0 * 1024.0), id()});
  }
  return out;
}

StreamingToolCollector::StreamingToolCollector(std::string id, std::vector<MetricKind> kinds,
                                               std::vector<std::string> argv, LineParser parser)
    : id_(std::move(id)), kinds_(std::move(kinds)), argv_(std::move(argv)), parser_(std::move(parser)) {}

void StreamingToolCollector::init() {
  if (argv_.empty() || !find_executable(argv_[0])) {
    throw CollectorInitError("'" + (argv_.empty() ? std::string() : argv_[0]) + "' not found on PATH");
  }
  try {
    SpawnOptions opts;
    opts.argv = argv_;
    opts.capture_stdout = true;
    process_ = Subprocess::spawn(opts);
  } catch (const LaunchError& e) {
    throw CollectorInitError(e.what());
  }
}

std::vector<MetricSample> StreamingToolCollector::poll(double now) {
  std::vector<MetricSample> out;
  if (!process_) return out;
  while (auto line = process_->read_line(std::chrono::milliseconds(0))) {
    try {
      auto got = parser_(*line, now);
      out.insert(out.end(), got.begin(), got.end());
    } catch (const ParseError&) {
      // malformed line: skipped
    }
  }
  return out;
}

void StreamingToolCollector::stop() {
  if (process_) process_->terminate(std::chrono::milliseconds(500));
  process_.reset();
}

std::unique_ptr<Collector> make_dcgm_collector(double interval) {
  const int ms = std::max(1, static_cast<int>(std::lround(interval * 1000)));
  auto parser = std::make_shared<DcgmLineParser>();
  return std::make_unique<StreamingToolCollector>(
      "dcgm", std::vector<MetricKind>{MetricKind::smact, MetricKind::smocc, MetricKind::gpu_mem_bw},
      std::vector<std::string>{"dcgmi", "dmon", "-e", "1002,1003,1005", "-d", std::to_string(ms)},
      [parser](const std::string& line, double t) { return parser->feed(line, t); });
}

std::unique_ptr<Collector> make_pcm_memory_collector(double interval) {
  return std::make_unique<StreamingToolCollector>(
      "pcm-memory", std::vector<MetricKind>{MetricKind::cpu_mem_bw},
      std::vector<std::string>{"pcm-memory", format_double(std::max(interval, 0.1))},
      [](const std::string& line, double t) {
        std::vector<MetricSample> out;
        if (auto gbps = parse_pcm_memory_line(line)) out.push_back({t, MetricKind::cpu_mem_bw, *gbps, "pcm-memory"});
        return out;
      });
}

std::unique_ptr<Collector> make_nvml_collector(double interval) {
  const int ms = std::max(1, static_cast<int>(std::lround(interval * 1000)));
  return std::make_unique<StreamingToolCollector>(
      "nvml", std::vector<MetricKind>{MetricKind::power_gpu, MetricKind::gpu_mem_used},
      std::vector<std::string>{"nvidia-smi", "--query-gpu=power.draw,memory.used", "--format=csv,noheader,nounits",
                               "-lms", std::to_string(ms)},
      [](const std::string& line, double t) { return parse_nvsmi_line(line, t); });
}

RaplCollector::RaplCollector(std::filesystem::path root) : root_(std::move(root)) {}

void RaplCollector::init() {
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
    const auto name = entry.path().filename().string();
    // package domains only ("intel-rapl:0"), not sub-zones ("intel-rapl:0:1")
    if (!name.starts_with("intel-rapl:") || std::count(name.begin(), name.end(), ':') != 1) continue;
    Domain d;
    d.energy = entry.path() / "energy_uj";
    const auto energy = read_file(d.energy);
    const auto range = read_file(entry.path() / "max_energy_range_uj");
    if (energy.empty() || range.empty()) continue;
    d.last = std::stoull(energy);
    d.max_range = std::stoull(range);
    domains_.push_back(d);
  }
  if (domains_.empty()) throw CollectorInitError("no readable RAPL package domains under " + root_.string());
  std::sort(domains_.begin(), domains_.end(), [](const Domain& a, const Domain& b) { return a.energy < b.energy; });
  last_t_ = -1;
}

std::vector<MetricSample> RaplCollector::poll(double now) {
  double watts = 0;
  const bool first = last_t_ < 0;
  for (auto& d : domains_) {
    const auto text = read_file(d.energy);
    if (text.empty()) continue;
    const std::uint64_t e = std::stoull(text);
    if (!first) watts += rapl_power_watts(d.last, e, now - last_t_, d.max_range);
    d.last = e;
  }
  const double prev = last_t_;
  last_t_ = now;
  if (first || !(now > prev)) return {};
  return {{now, MetricKind::power_cpu, watts, id()}};
}

std::vector<std::unique_ptr<Collector>> default_collectors(double interval) {
  std::vector<std::unique_ptr<Collector>> out;
  out.push_back(std::make_unique<ProcStatCollector>());
  out.push_back(make_dcgm_collector(interval));
  out.push_back(make_pcm_memory_collector(interval));
  out.push_back(make_nvml_collector(interval));
  out.push_back(std::make_unique<RaplCollector>());
  return out;
}

}  // namespace genaibench
