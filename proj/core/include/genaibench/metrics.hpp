#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genaibench/config.hpp"
#include "genaibench/metric_sample.hpp"
#include "genaibench/monitor.hpp"
#include "genaibench/record.hpp"

namespace genaibench {

struct RunTrace;

struct TtftTpot {
  double ttft = 0;
  std::optional<double> tpot;  // nullopt for a single-token response (met by vacuity)
};

/// ttft = first token - submit; tpot = mean gap between consecutive tokens.
/// Throws NoTokens for a record without token times.
TtftTpot derive_ttft_tpot(const RequestRecord& record);

/// One evaluation unit: a request, or a single step for StepTime objectives.
struct UnitVerdict {
  std::string request_id;
  std::optional<int> step;
  bool met = false;
  double normalized_latency = 0;  // +inf for a failed request
};

struct PairBreakdown {
  std::size_t ttft_met = 0;
  std::size_t tpot_met = 0;
  std::size_t tpot_vacuous = 0;
};

struct SloResult {
  std::string task_name;
  std::string objective;              // describe(slo)
  std::optional<double> attainment;   // met / evaluated; nullopt when nothing applies
  std::size_t met = 0;
  std::size_t evaluated = 0;
  std::vector<UnitVerdict> per_request;
  std::optional<PairBreakdown> breakdown;  // LatencyPair only
};

/// Met uses <= at the threshold. Failed requests count as misses. Throws
/// VariantMismatch when a successful record lacks the marks `slo` needs.
SloResult evaluate_slo(const std::vector<RequestRecord>& records, const SloSpec& slo);

/// Observed latency over threshold: max of the two ratios for LatencyPair,
/// mean step over threshold for StepTime. Throws NoSlo for SloNone and
/// VariantMismatch when the record lacks the needed marks.
double normalized_latency(const RequestRecord& record, const SloSpec& slo);

struct LatencyStats {
  std::size_t count = 0;
  double mean = 0;
  double p50 = 0;
  double p95 = 0;
  double p99 = 0;
  double max = 0;
};

/// Nearest-rank statistics; nullopt for an empty input.
std::optional<LatencyStats> latency_stats(std::vector<double> values);

struct TaskReport {
  std::string instance;
  std::string task;
  AppKind app_kind = AppKind::synthetic;
  bool background = false;
  std::size_t requests = 0;
  std::size_t failed = 0;
  // "request" (submit to complete) plus per-kind series: ttft/tpot, step, segment.
  std::map<std::string, LatencyStats> latency;
  std::optional<SloResult> slo;
};

struct ReportMetadata {
  std::string policy;
  std::string mode;
  std::uint64_t seed = 0;
  std::string host;
  int sm_count = 0;
  std::map<std::string, int> shares;
  std::string percentile_method = "nearest-rank";
  std::string chatbot_normalization = "max(ttft/ttft_slo, tpot/tpot_slo)";
  std::string status;
  bool partial = false;
};

inline constexpr int kReportFormatVersion = 1;

struct Report {
  ReportMetadata metadata;
  std::vector<TaskReport> tasks;  // workflow declaration order
  std::map<MetricKind, Summary> resources;
  std::optional<double> e2e_seconds;
  std::vector<std::string> notes;
};

/// Everything is recomputed from the trace, so a report rebuilt from files
/// written by write_trace() equals the report of the original run.
Report build_report(const RunTrace& trace);

/// Workflow span: last non-background exec finish minus first setup start.
std::optional<double> workflow_e2e(const RunTrace& trace);

std::string report_to_json(const Report& report);
/// Short text summary; ANSI colour only when `color` is set.
std::string human_summary(const Report& report, bool color);

/// Writes report.json, latency_<instance>.csv and util_<kind>.csv into `dir`.
void write_report_files(const Report& report, const RunTrace& trace, const std::string& dir);

}  // namespace genaibench
