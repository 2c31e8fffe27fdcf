#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace genaibench {

enum class MetricKind {
  smact,
  smocc,
  gpu_mem_bw,
  gpu_mem_used,
  cpu_util,
  cpu_mem_bw,
  cpu_mem_used,
  power_gpu,
  power_cpu,
};

std::string_view to_string(MetricKind kind);
std::optional<MetricKind> parse_metric_kind(std::string_view text);
/// smact, smocc, gpu_mem_bw (DRAM-active percent) and cpu_util.
bool is_percent(MetricKind kind);

// Units: percent for is_percent() kinds, GB/s for cpu_mem_bw, GB for the
// *_mem_used kinds, watts for power.
struct MetricSample {
  double t = 0;  // seconds since run start
  MetricKind kind = MetricKind::cpu_util;
  double value = 0;
  std::string source;

  bool operator==(const MetricSample&) const = default;
};

/// A poll slot in which a collector produced nothing. Never interpolated.
struct MetricGap {
  double t = 0;
  std::string source;

  bool operator==(const MetricGap&) const = default;
};

}  // namespace genaibench
