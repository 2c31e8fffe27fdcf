#include "genaibench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "genaibench/error.hpp"
#include "genaibench/stats.hpp"
#include "genaibench/trace.hpp"

namespace genaibench {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  }
  return out;
}

ojson stats_json(const LatencyStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"p50", s.p50}, {"p95", s.p95}, {"p99", s.p99}, {"max", s.max}};
}

}  // namespace

TtftTpot derive_ttft_tpot(const RequestRecord& record) {
  const auto& tok = record.token_times;
  if (tok.empty()) throw NoTokens("request '" + record.request_id + "' has no token times");
  TtftTpot out;
  out.ttft = record.t_first_output - record.t_submit;
  if (tok.size() >= 2) out.tpot = (tok.back() - tok.front()) / static_cast<double>(tok.size() - 1);
  return out;
}

double normalized_latency(const RequestRecord& record, const SloSpec& slo) {
  return std::visit(
      overloaded{
          [&](const SloNone&) -> double { throw NoSlo("task has no SLO threshold"); },
          [&](const SloLatencyPair& p) -> double {
            if (record.token_times.empty()) throw VariantMismatch("latency-pair SLO needs token times");
            const auto d = derive_ttft_tpot(record);
            return std::max(d.ttft / p.ttft, d.tpot ? *d.tpot / p.tpot : 0.0);
          },
          [&](const SloStepTime& s) -> double {
            if (record.step_times.empty()) throw VariantMismatch("step-time SLO needs step times");
            const double sum = std::accumulate(record.step_times.begin(), record.step_times.end(), 0.0);
            return sum / static_cast<double>(record.step_times.size()) / s.step;
          },
          [&](const SloSegmentTime& s) -> double {
            if (!record.segment_latency) throw VariantMismatch("segment-time SLO needs a segment latency");
            return *record.segment_latency / s.segment;
          },
      },
      slo);
}

SloResult evaluate_slo(const std::vector<RequestRecord>& records, const SloSpec& slo) {
  SloResult out;
  out.objective = describe(slo);
  if (!records.empty()) out.task_name = records.front().instance;
  if (std::holds_alternative<SloNone>(slo)) return out;

  auto add = [&](const std::string& id, std::optional<int> step, bool met, double norm) {
    out.per_request.push_back({id, step, met, norm});
    ++out.evaluated;
    if (met) ++out.met;
  };

  if (std::holds_alternative<SloLatencyPair>(slo)) out.breakdown = PairBreakdown{};

  for (const auto& r : records) {
    if (!r.ok) {
      add(r.request_id, std::nullopt, false, kInf);
      continue;
    }
    std::visit(overloaded{
                   [&](const SloNone&) {},
                   [&](const SloLatencyPair& p) {
                     if (r.token_times.empty()) {
                       throw VariantMismatch("request '" + r.request_id + "' has no token times");
                     }
                     const auto d = derive_ttft_tpot(r);
                     const bool ttft_ok = d.ttft <= p.ttft;
                     const bool tpot_ok = !d.tpot || *d.tpot <= p.tpot;
                     if (ttft_ok) ++out.breakdown->ttft_met;
                     if (tpot_ok) ++out.breakdown->tpot_met;
                     if (!d.tpot) ++out.breakdown->tpot_vacuous;
                     add(r.request_id, std::nullopt, ttft_ok && tpot_ok, normalized_latency(r, slo));
                   },
                   [&](const SloStepTime& s) {
                     if (r.step_times.empty()) {
                       throw VariantMismatch("request '" + r.request_id + "' has no step times");
                     }
                     for (std::size_t i = 0; i < r.step_times.size(); ++i) {
                       const double st = r.step_times[i];
                       add(r.request_id, static_cast<int>(i), st <= s.step, st / s.step);
                     }
                   },
                   [&](const SloSegmentTime& s) {
                     if (!r.segment_latency) {
                       throw VariantMismatch("request '" + r.request_id + "' has no segment latency");
                     }
                     add(r.request_id, std::nullopt, *r.segment_latency <= s.segment, *r.segment_latency / s.segment);
                   },
               },
               slo);
  }
  if (out.evaluated > 0) out.attainment = static_cast<double>(out.met) / static_cast<double>(out.evaluated);
  return out;
}

std::optional<LatencyStats> latency_stats(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  LatencyStats s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.p50 = nearest_rank(values, 50);
  s.p95 = nearest_rank(values, 95);
  s.p99 = nearest_rank(values, 99);
  s.max = values.back();
  return s;
}

std::optional<double> workflow_e2e(const RunTrace& trace) {
  std::optional<Nanos> first_setup, last_exec;
  for (const auto& node : trace.nodes) {
    if (node.kind == NodeKind::setup) {
      if (auto t = trace.time_of(node.id, Phase::started)) first_setup = std::min(first_setup.value_or(*t), *t);
    } else if (node.kind == NodeKind::exec && !node.background) {
      if (auto t = trace.time_of(node.id, Phase::finished)) last_exec = std::max(last_exec.value_or(*t), *t);
    }
  }
  if (!first_setup || !last_exec) return std::nullopt;
  return to_seconds(*last_exec - *first_setup);
}

Report build_report(const RunTrace& trace) {
  Report report;
  auto& md = report.metadata;
  md.policy = std::string(to_string(trace.header.policy));
  md.mode = std::string(to_string(trace.header.mode));
  md.seed = trace.header.seed;
  md.host = trace.header.host;
  md.sm_count = trace.header.sm_count;
  md.shares = trace.header.shares;
  md.status = trace.header.status;
  md.partial = trace.header.status != "complete";

  std::map<std::string, std::vector<const RequestRecord*>> by_instance;
  for (const auto& r : trace.requests) by_instance[r.instance].push_back(&r);

  for (const auto& node : trace.spec.workflow) {
    const auto& task = trace.spec.task_of(node);
    TaskReport tr;
    tr.instance = node.node_id;
    tr.task = task.name;
    tr.app_kind = task.app_kind;
    tr.background = node.background;

    std::vector<RequestRecord> records;
    for (const auto* r : by_instance[node.node_id]) records.push_back(*r);
    tr.requests = records.size();

    std::vector<double> request, ttft, tpot, step, segment;
    for (const auto& r : records) {
      if (!r.ok) {
        ++tr.failed;
        continue;
      }
      request.push_back(r.t_complete - r.t_submit);
      if (!r.token_times.empty()) {
        const auto d = derive_ttft_tpot(r);
        ttft.push_back(d.ttft);
        if (d.tpot) tpot.push_back(*d.tpot);
      }
      step.insert(step.end(), r.step_times.begin(), r.step_times.end());
      if (r.segment_latency) segment.push_back(*r.segment_latency);
    }
    for (auto& [name, values] : std::vector<std::pair<std::string, std::vector<double>*>>{
             {"request", &request}, {"ttft", &ttft}, {"tpot", &tpot}, {"step", &step}, {"segment", &segment}}) {
      if (auto s = latency_stats(*values)) tr.latency[name] = *s;
    }

    if (!std::holds_alternative<SloNone>(task.slo)) {
      try {
        auto result = evaluate_slo(records, task.slo);
        result.task_name = node.node_id;
        tr.slo = std::move(result);
      } catch (const VariantMismatch& e) {
        report.notes.push_back("SLO for '" + node.node_id + "' not evaluated: " + e.what());
      }
    }
    report.tasks.push_back(std::move(tr));
  }

  std::set<MetricKind> kinds;
  for (const auto& s : trace.samples) kinds.insert(s.kind);
  for (auto k : kinds) {
    if (auto s = summarize(trace.samples, k)) report.resources[k] = *s;
  }
  report.e2e_seconds = workflow_e2e(trace);
  report.notes.insert(report.notes.begin(), trace.notes.begin(), trace.notes.end());
  return report;
}

std::string report_to_json(const Report& report) {
  ojson j;
  j["format_version"] = kReportFormatVersion;
  const auto& md = report.metadata;
  ojson shares = ojson::object();
  for (const auto& [app, share] : md.shares) shares[app] = share;
  j["metadata"] = {{"policy", md.policy},
                   {"mode", md.mode},
                   {"seed", md.seed},
                   {"host", md.host},
                   {"sm_count", md.sm_count},
                   {"shares", shares},
                   {"percentile_method", md.percentile_method},
                   {"chatbot_normalization", md.chatbot_normalization},
                   {"status", md.status},
                   {"partial", md.partial}};
  j["e2e_seconds"] = report.e2e_seconds ? ojson(*report.e2e_seconds) : ojson(nullptr);

  ojson tasks = ojson::array();
  for (const auto& t : report.tasks) {
    ojson tj;
    tj["instance"] = t.instance;
    tj["task"] = t.task;
    tj["app_kind"] = std::string(to_string(t.app_kind));
    tj["background"] = t.background;
    tj["requests"] = t.requests;
    tj["failed"] = t.failed;
    ojson lat = ojson::object();
    for (const auto& [name, s] : t.latency) lat[name] = stats_json(s);
    tj["latency"] = lat;
    if (t.slo) {
      const auto& s = *t.slo;
      ojson sj;
      sj["objective"] = s.objective;
      sj["attainment"] = s.attainment ? ojson(*s.attainment) : ojson(nullptr);
      sj["met"] = s.met;
      sj["evaluated"] = s.evaluated;
      if (s.breakdown) {
        sj["breakdown"] = {{"ttft_met", s.breakdown->ttft_met},
                           {"tpot_met", s.breakdown->tpot_met},
                           {"tpot_vacuous", s.breakdown->tpot_vacuous}};
      }
      ojson units = ojson::array();
      for (const auto& u : s.per_request) {
        ojson uj = {{"request_id", u.request_id}};
        if (u.step) uj["step"] = *u.step;
        uj["met"] = u.met;
        uj["normalized_latency"] = number_or_null(u.normalized_latency);
        units.push_back(std::move(uj));
      }
      sj["per_request"] = std::move(units);
      tj["slo"] = std::move(sj);
    } else {
      tj["slo"] = nullptr;
    }
    tasks.push_back(std::move(tj));
  }
  j["tasks"] = std::move(tasks);

  ojson res = ojson::object();
  for (const auto& [kind, s] : report.resources) {
    res[std::string(to_string(kind))] = {
        {"count", s.count}, {"mean", s.mean}, {"p50", s.p50}, {"p95", s.p95}, {"max", s.max}};
  }
  j["resources"] = std::move(res);
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

}  // namespace

std::string human_summary(const Report& report, bool color) {
  const char* bold = color ? "\033[1m" : "";
  const char* reset = color ? "\033[0m" : "";
  std::ostringstream out;
  const auto& md = report.metadata;
  out << bold << "policy " << md.policy << ", mode " << md.mode << ", seed " << md.seed << reset;
  if (md.partial) out << " (" << md.status << ")";
  out << "\n";
  out << "workflow e2e: " << (report.e2e_seconds ? fixed(*report.e2e_seconds, 3) + "s" : "n/a") << "\n";
  for (const auto& t : report.tasks) {
    out << "  " << bold << t.instance << reset << " [" << to_string(t.app_kind) << (t.background ? ", background" : "")
        << "] requests=" << t.requests;
    if (t.failed) out << " failed=" << t.failed;
    if (auto it = t.latency.find("request"); it != t.latency.end()) {
      out << " p50=" << fixed(it->second.p50, 3) << "s p95=" << fixed(it->second.p95, 3) << "s";
    }
    if (t.slo && t.slo->attainment) {
      out << " slo(" << t.slo->objective << ") " << t.slo->met << "/" << t.slo->evaluated << " = "
          << fixed(*t.slo->attainment * 100.0, 1) << "%";
    }
    out << "\n";
  }
  for (const auto& [kind, s] : report.resources) {
    out << "  " << to_string(kind) << ": mean " << fixed(s.mean, 2) << " p95 " << fixed(s.p95, 2) << " max "
        << fixed(s.max, 2) << "\n";
  }
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  return out.str();
}

void write_report_files(const Report& report, const RunTrace& trace, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / "report.json");
    f << report_to_json(report);
  }

  for (const auto& t : report.tasks) {
    std::map<std::string, double> norm;
    if (t.slo) {
      for (const auto& u : t.slo->per_request) {
        if (!u.step) norm[u.request_id] = u.normalized_latency;
      }
    }
    std::ofstream f(fs::path(dir) / ("latency_" + file_safe(t.instance) + ".csv"));
    f << "request_id,t_submit,t_first_output,t_complete,latency,ok,normalized_latency\n";
    for (const auto& r : trace.requests) {
      if (r.instance != t.instance) continue;
      f << r.request_id << ',' << format_double(r.t_submit) << ',' << format_double(r.t_first_output) << ','
        << format_double(r.t_complete) << ',' << format_double(r.t_complete - r.t_submit) << ','
        << (r.ok ? "true" : "false") << ',';
      if (auto it = norm.find(r.request_id); it != norm.end() && std::isfinite(it->second)) {
        f << format_double(it->second);
      }
      f << '\n';
    }
  }

  std::map<MetricKind, std::set<std::string>> sources;
  for (const auto& s : trace.samples) sources[s.kind].insert(s.source);
  for (const auto& [kind, srcs] : sources) {
    std::vector<std::pair<double, std::string>> rows;
    for (const auto& s : trace.samples) {
      if (s.kind == kind) rows.emplace_back(s.t, format_double(s.t) + "," + format_double(s.value) + "," + s.source);
    }
    for (const auto& g : trace.gaps) {
      if (srcs.count(g.source)) rows.emplace_back(g.t, format_double(g.t) + ",," + g.source);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::ofstream f(fs::path(dir) / ("util_" + std::string(to_string(kind)) + ".csv"));
    f << "t,value,source\n";
    for (const auto& row : rows) f << row.second << '\n';
  }
}

}  // namespace genaibench
