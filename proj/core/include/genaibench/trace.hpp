#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genaibench/config.hpp"
#include "genaibench/dag.hpp"
#include "genaibench/metric_sample.hpp"
#include "genaibench/record.hpp"

namespace genaibench {

enum class Phase { dispatched, started, finished, failed, cancelled };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);
inline bool is_terminal(Phase p) { return p == Phase::finished || p == Phase::failed || p == Phase::cancelled; }

struct NodeEvent {
  std::string node;
  Phase phase = Phase::dispatched;
  Nanos t = 0;  // since run start
  std::string detail;

  bool operator==(const NodeEvent&) const = default;
};

inline constexpr int kTraceFormatVersion = 1;

struct TraceHeader {
  int format_version = kTraceFormatVersion;
  Mode mode = Mode::simulated;
  Policy policy = Policy::greedy;
  std::uint64_t seed = 0;
  std::string host;
  std::optional<std::string> wall_clock_start;  // live runs only
  int sm_count = 0;
  std::string status = "complete";  // complete | failed | interrupted
  std::map<std::string, int> shares;

  bool operator==(const TraceHeader&) const = default;
};

struct RunTrace {
  TraceHeader header;
  BenchmarkSpec spec;
  std::vector<DagNode> nodes;
  std::vector<NodeEvent> events;  // sorted by t, then arrival
  std::vector<RequestRecord> requests;
  std::vector<MetricSample> samples;
  std::vector<MetricGap> gaps;
  std::vector<std::string> notes;

  std::vector<const NodeEvent*> events_of(const std::string& node) const;
  /// First event of `phase` for `node`.
  std::optional<Nanos> time_of(const std::string& node, Phase phase) const;
  /// Terminal phase of `node`, if it reached one.
  std::optional<Phase> outcome(const std::string& node) const;
};

/// Writes trace.json, requests.json and samples.csv into `dir` (created if
/// needed). Output bytes depend only on the trace contents.
void write_trace(const RunTrace& trace, const std::filesystem::path& dir);
/// Reads what write_trace() wrote. Throws ParseError on malformed input.
RunTrace read_trace(const std::filesystem::path& dir);

std::string trace_to_json(const RunTrace& trace);
std::string requests_to_json(const std::vector<RequestRecord>& requests);
std::string samples_to_csv(const std::vector<MetricSample>& samples, const std::vector<MetricGap>& gaps);

}  // namespace genaibench
