#include "genaibench/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "genaibench/error.hpp"

namespace genaibench {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kPhaseNames[] = {"dispatched", "started", "finished", "failed", "cancelled"};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

ojson parse_json(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
}

double parse_number(const std::string& text) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw ParseError("bad number '" + text + "'");
  return v;
}

}  // namespace

std::string_view to_string(Phase phase) { return kPhaseNames[static_cast<int>(phase)]; }

std::optional<Phase> parse_phase(std::string_view text) {
  for (int i = 0; i < 5; ++i) {
    if (text == kPhaseNames[i]) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

std::vector<const NodeEvent*> RunTrace::events_of(const std::string& node) const {
  std::vector<const NodeEvent*> out;
  for (const auto& e : events) {
    if (e.node == node) out.push_back(&e);
  }
  return out;
}

std::optional<Nanos> RunTrace::time_of(const std::string& node, Phase phase) const {
  for (const auto& e : events) {
    if (e.node == node && e.phase == phase) return e.t;
  }
  return std::nullopt;
}

std::optional<Phase> RunTrace::outcome(const std::string& node) const {
  for (const auto& e : events) {
    if (e.node == node && is_terminal(e.phase)) return e.phase;
  }
  return std::nullopt;
}

std::string trace_to_json(const RunTrace& trace) {
  ojson j;
  j["format_version"] = kTraceFormatVersion;
  const auto& h = trace.header;
  ojson header = {{"mode", std::string(to_string(h.mode))},
                  {"policy", std::string(to_string(h.policy))},
                  {"seed", h.seed},
                  {"host", h.host}};
  if (h.wall_clock_start) header["wall_clock_start"] = *h.wall_clock_start;
  header["sm_count"] = h.sm_count;
  header["status"] = h.status;
  ojson shares = ojson::object();
  for (const auto& [app, s] : h.shares) shares[app] = s;
  header["shares"] = shares;
  j["header"] = std::move(header);
  j["spec"] = serialize_config(trace.spec);

  ojson nodes = ojson::array();
  for (const auto& n : trace.nodes) {
    ojson nj = {{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"instances", n.instances}};
    if (n.server) nj["server"] = *n.server;
    nj["background"] = n.background;
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);

  ojson events = ojson::array();
  for (const auto& e : trace.events) {
    ojson ej = {{"node", e.node}, {"phase", std::string(to_string(e.phase))}, {"t_ns", e.t}};
    if (!e.detail.empty()) ej["detail"] = e.detail;
    events.push_back(std::move(ej));
  }
  j["events"] = std::move(events);
  j["notes"] = trace.notes;
  return j.dump(2) + "\n";
}

std::string requests_to_json(const std::vector<RequestRecord>& requests) {
  ojson arr = ojson::array();
  for (const auto& r : requests) {
    ojson rj = {{"task", r.task_name},         {"instance", r.instance},   {"request_id", r.request_id},
                {"t_submit", r.t_submit},      {"t_first_output", r.t_first_output},
                {"t_complete", r.t_complete}};
    if (!r.token_times.empty()) rj["token_times"] = r.token_times;
    if (!r.step_times.empty()) rj["step_times"] = r.step_times;
    if (r.segment_latency) rj["segment_latency"] = *r.segment_latency;
    if (r.segment_index) rj["segment_index"] = *r.segment_index;
    rj["ok"] = r.ok;
    if (!r.detail.empty()) rj["detail"] = r.detail;
    arr.push_back(std::move(rj));
  }
  ojson j = {{"format_version", kTraceFormatVersion}, {"requests", std::move(arr)}};
  return j.dump(2) + "\n";
}

std::string samples_to_csv(const std::vector<MetricSample>& samples, const std::vector<MetricGap>& gaps) {
  std::vector<std::pair<double, std::string>> rows;
  rows.reserve(samples.size() + gaps.size());
  for (const auto& s : samples) {
    rows.emplace_back(s.t, format_double(s.t) + "," + std::string(to_string(s.kind)) + "," + format_double(s.value) +
                               "," + s.source);
  }
  for (const auto& g : gaps) rows.emplace_back(g.t, format_double(g.t) + ",gap,," + g.source);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out = "t,kind,value,source\n";
  for (const auto& r : rows) out += r.second + "\n";
  return out;
}

void write_trace(const RunTrace& trace, const fs::path& dir) {
  fs::create_directories(dir);
  spit(dir / "trace.json", trace_to_json(trace));
  spit(dir / "requests.json", requests_to_json(trace.requests));
  spit(dir / "samples.csv", samples_to_csv(trace.samples, trace.gaps));
}

RunTrace read_trace(const fs::path& dir) {
  RunTrace trace;
  try {
    const auto j = parse_json(slurp(dir / "trace.json"), "trace.json");
    if (j.at("format_version").get<int>() != kTraceFormatVersion) {
      throw ParseError("unsupported trace format_version " + j.at("format_version").dump());
    }
    const auto& h = j.at("header");
    auto mode = parse_mode(h.at("mode").get<std::string>());
    auto policy = parse_policy(h.at("policy").get<std::string>());
    if (!mode || !policy) throw ParseError("trace header has an unknown mode or policy");
    trace.header.mode = *mode;
    trace.header.policy = *policy;
    trace.header.seed = h.at("seed").get<std::uint64_t>();
    trace.header.host = h.at("host").get<std::string>();
    if (h.contains("wall_clock_start")) trace.header.wall_clock_start = h.at("wall_clock_start").get<std::string>();
    trace.header.sm_count = h.at("sm_count").get<int>();
    trace.header.status = h.at("status").get<std::string>();
    for (const auto& [app, s] : h.at("shares").items()) trace.header.shares[app] = s.get<int>();

    try {
      trace.spec = parse_config(j.at("spec").get<std::string>());
    } catch (const Error& e) {
      throw ParseError(std::string("spec snapshot: ") + e.what());
    }

    for (const auto& nj : j.at("nodes")) {
      DagNode n;
      n.id = nj.at("id").get<std::string>();
      const auto kind = nj.at("kind").get<std::string>();
      n.kind = kind == "setup" ? NodeKind::setup : kind == "cleanup" ? NodeKind::cleanup : NodeKind::exec;
      n.instances = nj.at("instances").get<std::vector<std::string>>();
      if (nj.contains("server")) n.server = nj.at("server").get<std::string>();
      n.background = nj.at("background").get<bool>();
      trace.nodes.push_back(std::move(n));
    }
    for (const auto& ej : j.at("events")) {
      NodeEvent e;
      e.node = ej.at("node").get<std::string>();
      auto phase = parse_phase(ej.at("phase").get<std::string>());
      if (!phase) throw ParseError("unknown phase " + ej.at("phase").dump());
      e.phase = *phase;
      e.t = ej.at("t_ns").get<Nanos>();
      if (ej.contains("detail")) e.detail = ej.at("detail").get<std::string>();
      trace.events.push_back(std::move(e));
    }
    trace.notes = j.at("notes").get<std::vector<std::string>>();

    const auto rq = parse_json(slurp(dir / "requests.json"), "requests.json");
    for (const auto& rj : rq.at("requests")) {
      RequestRecord r;
      r.task_name = rj.at("task").get<std::string>();
      r.instance = rj.at("instance").get<std::string>();
      r.request_id = rj.at("request_id").get<std::string>();
      r.t_submit = rj.at("t_submit").get<double>();
      r.t_first_output = rj.at("t_first_output").get<double>();
      r.t_complete = rj.at("t_complete").get<double>();
      if (rj.contains("token_times")) r.token_times = rj.at("token_times").get<std::vector<double>>();
      if (rj.contains("step_times")) r.step_times = rj.at("step_times").get<std::vector<double>>();
      if (rj.contains("segment_latency")) r.segment_latency = rj.at("segment_latency").get<double>();
      if (rj.contains("segment_index")) r.segment_index = rj.at("segment_index").get<int>();
      r.ok = rj.at("ok").get<bool>();
      if (rj.contains("detail")) r.detail = rj.at("detail").get<std::string>();
      trace.requests.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed trace: ") + e.what());
  }

  std::istringstream csv(slurp(dir / "samples.csv"));
  std::string line;
  std::getline(csv, line);
  if (line != "t,kind,value,source") throw ParseError("samples.csv: unexpected header '" + line + "'");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
      const auto comma = line.find(',', pos);
      if (comma == std::string::npos) throw ParseError("samples.csv: short row '" + line + "'");
      f.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    f.push_back(line.substr(pos));
    if (f[1] == "gap") {
      trace.gaps.push_back({parse_number(f[0]), f[3]});
      continue;
    }
    auto kind = parse_metric_kind(f[1]);
    if (!kind) throw ParseError("samples.csv: unknown kind '" + f[1] + "'");
    trace.samples.push_back({parse_number(f[0]), *kind, parse_number(f[2]), f[3]});
  }
  return trace;
}

}  // namespace genaibench
