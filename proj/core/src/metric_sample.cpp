#include "genaibench/metric_sample.hpp"

#include <array>
#include <utility>

namespace genaibench {

namespace {
constexpr std::array<std::pair<MetricKind, std::string_view>, 9> kNames = {{
    {MetricKind::smact, "smact"},
    {MetricKind::smocc, "smocc"},
    {MetricKind::gpu_mem_bw, "gpu_mem_bw"},
    {MetricKind::gpu_mem_used, "gpu_mem_used"},
    {MetricKind::cpu_util, "cpu_util"},
    {MetricKind::cpu_mem_bw, "cpu_mem_bw"},
    {MetricKind::cpu_mem_used, "cpu_mem_used"},
    {MetricKind::power_gpu, "power_gpu"},
    {MetricKind::power_cpu, "power_cpu"},
}};
}  // namespace

std::string_view to_string(MetricKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<MetricKind> parse_metric_kind(std::string_view text) {
  for (const auto& [k, name] : kNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

bool is_percent(MetricKind kind) {
  return kind == MetricKind::smact || kind == MetricKind::smocc || kind == MetricKind::gpu_mem_bw ||
         kind == MetricKind::cpu_util;
}

}  // namespace genaibench
