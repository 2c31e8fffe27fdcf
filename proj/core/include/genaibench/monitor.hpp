#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "genaibench/clock.hpp"
#include "genaibench/metric_sample.hpp"
#include "genaibench/subprocess.hpp"

namespace genaibench {

/// A source of system metrics. poll() should return within one sample
/// interval; slower polls leave gaps.
class Collector {
 public:
  virtual ~Collector() = default;
  virtual std::string id() const = 0;
  virtual std::vector<MetricKind> kinds() const = 0;
  /// Throws CollectorInitError when the host cannot support this collector.
  virtual void init() {}
  virtual std::vector<MetricSample> poll(double now) = 0;
  virtual void stop() {}
};

struct MonitorReport {
  std::vector<MetricSample> samples;  // arrival order
  std::vector<MetricGap> gaps;
  std::vector<std::string> notes;     // disabled collectors, data-quality warnings
};

/// Runs one polling thread per collector until stop().
class MonitorHandle {
 public:
  MonitorHandle(std::vector<std::unique_ptr<Collector>> collectors, double interval, const RunClock& clock);
  MonitorHandle(const MonitorHandle&) = delete;
  MonitorHandle& operator=(const MonitorHandle&) = delete;
  ~MonitorHandle();

  /// Stops every collector and returns what was gathered. Later calls return
  /// an empty report.
  MonitorReport stop();

 private:
  void run_collector(Collector& collector, std::stop_token stop);

  std::vector<std::unique_ptr<Collector>> collectors_;
  double interval_;
  const RunClock& clock_;
  std::mutex sink_mutex_;
  MonitorReport report_;
  std::vector<std::jthread> threads_;
  bool stopped_ = false;
};

/// Throws PreconditionError unless interval > 0. Collectors whose init()
/// fails are disabled for the run and noted in the report.
std::unique_ptr<MonitorHandle> start_monitor(std::vector<std::unique_ptr<Collector>> collectors, double interval,
                                             const RunClock& clock);

// ------------------------------------------------------------------ parsers

/// CPU utilization in percent between two /proc/stat snapshots of the
/// aggregate "cpu" line: 100 * (1 - d_idle / d_total), where idle counts the
/// idle and iowait columns and total sums every column.
double parse_proc_stat(const std::string& before, const std::string& after);

/// Column names of `dcgmi dmon -e 1002,1003,1005`.
std::vector<std::string> default_dcgm_columns();

/// One line of `dcgmi dmon` output. Header and unit lines yield nothing;
/// fractions (SMACT, SMOCC, DRAMA) are scaled to percent, FBUSD (MiB) to GB.
/// Throws ParseError on a malformed value.
std::vector<MetricSample> parse_dcgm_line(const std::string& line, double t,
                                          const std::vector<std::string>& columns = default_dcgm_columns(),
                                          const std::string& source = "dcgm");

/// Stateful dmon parser that learns column order from "#Entity ..." headers.
class DcgmLineParser {
 public:
  std::vector<MetricSample> feed(const std::string& line, double t);
  std::size_t skipped() const { return skipped_; }

 private:
  std::vector<std::string> columns_ = default_dcgm_columns();
  std::size_t skipped_ = 0;
};

/// System memory throughput (GB/s) from a pcm-memory report line, if present.
std::optional<double> parse_pcm_memory_line(const std::string& line);

/// "power.draw, memory.used" as printed by nvidia-smi in csv,noheader,nounits.
std::vector<MetricSample> parse_nvsmi_line(const std::string& line, double t, const std::string& source = "nvml");

/// Average power from two RAPL energy readings (microjoules), handling one
/// counter wrap at `max_range_uj`.
double rapl_power_watts(std::uint64_t before_uj, std::uint64_t after_uj, double dt_seconds,
                        std::uint64_t max_range_uj);

// ------------------------------------------------------------------ summary

struct Summary {
  std::size_t count = 0;
  double mean = 0;
  double p50 = 0;
  double p95 = 0;
  double max = 0;
};

struct TimeWindow {
  double begin = 0;
  double end = 0;  // inclusive
};

/// Statistics of `kind` over samples inside `window` (all samples when no
/// window); nullopt when none qualify. Percentiles are nearest-rank.
std::optional<Summary> summarize(const std::vector<MetricSample>& samples, MetricKind kind,
                                 std::optional<TimeWindow> window = std::nullopt);

// --------------------------------------------------------------- collectors

/// Wraps a callable; used for stubs and tests.
class FunctionCollector : public Collector {
 public:
  using PollFn = std::function<std::vector<MetricSample>(double)>;
  FunctionCollector(std::string id, std::vector<MetricKind> kinds, PollFn fn);

  std::string id() const override { return id_; }
  std::vector<MetricKind> kinds() const override { return kinds_; }
  std::vector<MetricSample> poll(double now) override { return fn_(now); }

 private:
  std::string id_;
  std::vector<MetricKind> kinds_;
  PollFn fn_;
};

/// cpu_util from /proc/stat and cpu_mem_used from /proc/meminfo.
class ProcStatCollector : public Collector {
 public:
  explicit ProcStatCollector(std::filesystem::path stat = "/proc/stat",
                             std::filesystem::path meminfo = "/proc/meminfo");
  std::string id() const override { return "procstat"; }
  std::vector<MetricKind> kinds() const override { return {MetricKind::cpu_util, MetricKind::cpu_mem_used}; }
  void init() override;
  std::vector<MetricSample> poll(double now) override;

 private:
  std::filesystem::path stat_path_, meminfo_path_;
  std::string previous_;
};

/// Long-running tool whose stdout is parsed line by line on every poll.
class StreamingToolCollector : public Collector {
 public:
  using LineParser = std::function<std::vector<MetricSample>(const std::string&, double)>;
  StreamingToolCollector(std::string id, std::vector<MetricKind> kinds, std::vector<std::string> argv,
                         LineParser parser);

  std::string id() const override { return id_; }
  std::vector<MetricKind> kinds() const override { return kinds_; }
  void init() override;
  std::vector<MetricSample> poll(double now) override;
  void stop() override;

 private:
  std::string id_;
  std::vector<MetricKind> kinds_;
  std::vector<std::string> argv_;
  LineParser parser_;
  std::optional<Subprocess> process_;
};

/// `dcgmi dmon` SMACT/SMOCC/DRAM-active stream.
std::unique_ptr<Collector> make_dcgm_collector(double interval);
/// `pcm-memory` system DRAM throughput stream.
std::unique_ptr<Collector> make_pcm_memory_collector(double interval);
/// `nvidia-smi` (NVML) power and memory stream.
std::unique_ptr<Collector> make_nvml_collector(double interval);

/// CPU package power from powercap RAPL energy counters.
class RaplCollector : public Collector {
 public:
  explicit RaplCollector(std::filesystem::path root = "/sys/class/powercap");
  std::string id() const override { return "rapl"; }
  std::vector<MetricKind> kinds() const override { return {MetricKind::power_cpu}; }
  void init() override;
  std::vector<MetricSample> poll(double now) override;

 private:
  struct Domain {
    std::filesystem::path energy;
    std::uint64_t max_range = 0;
    std::uint64_t last = 0;
  };
  std::filesystem::path root_;
  std::vector<Domain> domains_;
  double last_t_ = 0;
};

/// Every built-in live collector; unsupported ones disable themselves.
std::vector<std::unique_ptr<Collector>> default_collectors(double interval);

}  // namespace genaibench
