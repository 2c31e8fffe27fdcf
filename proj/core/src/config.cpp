#include "genaibench/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "genaibench/error.hpp"

namespace genaibench {

namespace {

using namespace std::string_literals;

const std::set<std::string> kOptionKeys = {"policy",  "mode",     "sample_interval", "output_dir",
                                           "seed",    "sm_count", "max_concurrency", "on_failure"};

const std::set<std::string> kTaskKeys = {
    "type",     "model",    "server_model", "num_requests", "device",  "mps",    "slo",
    "dataset",  "server",   "kv_cache",     "endpoint",     "launch",  "steps",  "timeout",
    "profile"};

const std::set<std::string> kNodeKeys = {"uses", "depend_on", "background"};

const std::set<std::string> kProfileKeys = {"prologue", "unit",    "units",   "period",
                                            "sleep",    "setup",   "cleanup", "jitter"};

const std::set<std::string> kKernelKeys = {"duration", "sm_demand", "repeat"};

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

void reject_unknown_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                         const std::string& context) {
  for (const auto& kv : map) {
    const auto key = kv.first.Scalar();
    if (!allowed.count(key)) {
      throw SchemaError("unknown key '" + key + "' in " + context + where(kv.first));
    }
  }
}

std::string scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw SchemaError(what + ": expected a scalar" + where(node));
  return node.Scalar();
}

long long integer(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(what + ": expected an integer, got '" + text + "'" + where(node));
  }
}

std::uint64_t unsigned_integer(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  if (!text.empty() && text.front() == '-') throw SchemaError(what + ": must be non-negative" + where(node));
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(what + ": expected an integer, got '" + text + "'" + where(node));
  }
}

double real(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(what + ": expected a number, got '" + text + "'" + where(node));
  }
}

bool boolean(const YAML::Node& node, const std::string& what) {
  bool v = false;
  if (!node.IsScalar() || !YAML::convert<bool>::decode(node, v)) {
    throw SchemaError(what + ": expected true/false" + where(node));
  }
  return v;
}

double seconds(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  const auto v = parse_seconds(text);
  if (!v) throw SchemaError(what + ": malformed duration '" + text + "'" + where(node));
  return *v;
}

Nanos nanos(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  const auto v = parse_nanos(text);
  if (!v) throw SchemaError(what + ": malformed duration '" + text + "'" + where(node));
  return *v;
}

template <typename T>
T enumerated(const YAML::Node& node, const std::string& what,
             std::optional<T> (*parse)(std::string_view)) {
  const auto text = scalar(node, what);
  const auto v = parse(text);
  if (!v) throw SchemaError(what + ": unrecognized value '" + text + "'" + where(node));
  return *v;
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& what) {
  std::vector<std::string> out;
  if (node.IsNull()) return out;
  if (node.IsScalar()) return {node.Scalar()};
  if (!node.IsSequence()) throw SchemaError(what + ": expected a list" + where(node));
  for (const auto& item : node) out.push_back(scalar(item, what));
  return out;
}

SloSpec parse_slo(const YAML::Node& node, AppKind kind, const std::string& what) {
  if (node.IsNull()) return SloNone{};
  if (node.IsSequence()) {
    if (node.size() != 2) throw SchemaError(what + ": a list SLO needs [ttft, tpot]" + where(node));
    return SloLatencyPair{seconds(node[0], what + ".ttft"), seconds(node[1], what + ".tpot")};
  }
  if (node.IsMap()) {
    reject_unknown_keys(node, {"ttft", "tpot", "step", "segment"}, what);
    if (node["ttft"] || node["tpot"]) {
      if (!node["ttft"] || !node["tpot"] || node.size() != 2) {
        throw SchemaError(what + ": latency SLO needs exactly ttft and tpot" + where(node));
      }
      return SloLatencyPair{seconds(node["ttft"], what + ".ttft"),
                            seconds(node["tpot"], what + ".tpot")};
    }
    if (node.size() != 1) throw SchemaError(what + ": expected one SLO field" + where(node));
    if (node["step"]) return SloStepTime{seconds(node["step"], what + ".step")};
    return SloSegmentTime{seconds(node["segment"], what + ".segment")};
  }
  // A bare duration reads as the per-step objective for image generation and
  // as a whole-unit latency objective otherwise.
  const double s = seconds(node, what);
  if (kind == AppKind::imagegen) return SloStepTime{s};
  return SloSegmentTime{s};
}

std::vector<KernelShape> parse_kernels(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) throw SchemaError(what + ": expected a list of kernels" + where(node));
  std::vector<KernelShape> out;
  for (const auto& k : node) {
    if (!k.IsMap()) throw SchemaError(what + ": kernel must be a mapping" + where(k));
    reject_unknown_keys(k, kKernelKeys, what);
    KernelShape shape;
    if (!k["duration"]) throw SchemaError(what + ": kernel missing 'duration'" + where(k));
    shape.duration = nanos(k["duration"], what + ".duration");
    if (k["sm_demand"]) shape.sm_demand = real(k["sm_demand"], what + ".sm_demand");
    if (k["repeat"]) shape.repeat = static_cast<int>(integer(k["repeat"], what + ".repeat"));
    out.push_back(shape);
  }
  return out;
}

WorkloadProfile parse_profile(const YAML::Node& node, AppKind kind, const std::string& what) {
  WorkloadProfile p = default_profile(kind);
  if (node.IsNull()) return p;
  if (!node.IsMap()) throw SchemaError(what + ": expected a mapping" + where(node));
  reject_unknown_keys(node, kProfileKeys, what);
  if (node["prologue"]) p.prologue = parse_kernels(node["prologue"], what + ".prologue");
  if (node["unit"]) p.unit = parse_kernels(node["unit"], what + ".unit");
  if (node["units"]) p.units = static_cast<int>(integer(node["units"], what + ".units"));
  if (node["period"]) p.period = nanos(node["period"], what + ".period");
  if (node["sleep"]) p.sleep = nanos(node["sleep"], what + ".sleep");
  if (node["setup"]) p.setup = nanos(node["setup"], what + ".setup");
  if (node["cleanup"]) p.cleanup = nanos(node["cleanup"], what + ".cleanup");
  if (node["jitter"]) p.jitter = real(node["jitter"], what + ".jitter");
  return p;
}

// "Creating Cover Art (ImageGen)" -> imagegen
std::optional<AppKind> kind_from_name(const std::string& name) {
  const auto open = name.rfind('(');
  const auto close = name.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  return parse_app_kind(name.substr(open + 1, close - open - 1));
}

TaskDefinition parse_task(const std::string& name, const YAML::Node& node,
                          const std::filesystem::path& base_dir) {
  const std::string ctx = "task '" + name + "'";
  reject_unknown_keys(node, kTaskKeys, ctx);

  TaskDefinition t;
  t.name = name;
  if (node["type"]) {
    t.app_kind = enumerated<AppKind>(node["type"], ctx + ".type", parse_app_kind);
  } else if (auto k = kind_from_name(name)) {
    t.app_kind = *k;
  } else {
    throw SchemaError(ctx + ": missing 'type' and no application kind in the name" + where(node));
  }

  if (node["model"] && node["server_model"]) {
    throw SchemaError(ctx + ": 'model' and 'server_model' are mutually exclusive" + where(node));
  }
  if (node["model"]) t.model = scalar(node["model"], ctx + ".model");
  if (node["server_model"]) t.model = scalar(node["server_model"], ctx + ".server_model");

  if (!node["num_requests"]) throw SchemaError(ctx + ": missing 'num_requests'" + where(node));
  t.num_requests = static_cast<int>(integer(node["num_requests"], ctx + ".num_requests"));
  if (!node["device"]) throw SchemaError(ctx + ": missing 'device'" + where(node));
  t.device = enumerated<Device>(node["device"], ctx + ".device", parse_device);

  if (node["mps"]) t.mps_share = static_cast<int>(integer(node["mps"], ctx + ".mps"));
  if (node["slo"]) t.slo = parse_slo(node["slo"], t.app_kind, ctx + ".slo");
  if (node["dataset"]) {
    std::filesystem::path p = scalar(node["dataset"], ctx + ".dataset");
    if (p.is_relative() && !base_dir.empty()) p = (base_dir / p).lexically_normal();
    t.dataset = p.string();
  }
  if (node["server"]) t.server = scalar(node["server"], ctx + ".server");
  if (node["kv_cache"]) t.kv_cache = enumerated<KvCache>(node["kv_cache"], ctx + ".kv_cache", parse_kv_cache);
  if (node["endpoint"]) t.endpoint = scalar(node["endpoint"], ctx + ".endpoint");
  if (node["launch"]) t.launch = string_list(node["launch"], ctx + ".launch");
  if (node["steps"]) t.steps = static_cast<int>(integer(node["steps"], ctx + ".steps"));
  if (node["timeout"]) t.timeout = seconds(node["timeout"], ctx + ".timeout");
  t.profile = parse_profile(node["profile"] ? node["profile"] : YAML::Node(), t.app_kind, ctx + ".profile");
  return t;
}

WorkflowNodeSpec parse_node(const std::string& id, const YAML::Node& node) {
  const std::string ctx = "workflow node '" + id + "'";
  if (!node.IsMap()) throw SchemaError(ctx + ": expected a mapping" + where(node));
  reject_unknown_keys(node, kNodeKeys, ctx);
  WorkflowNodeSpec n;
  n.node_id = id;
  if (!node["uses"]) throw SchemaError(ctx + ": missing 'uses'" + where(node));
  n.uses = scalar(node["uses"], ctx + ".uses");
  if (node["depend_on"]) n.depend_on = string_list(node["depend_on"], ctx + ".depend_on");
  if (node["background"]) n.background = boolean(node["background"], ctx + ".background");
  return n;
}

void parse_option(BenchmarkSpec& spec, const std::string& key, const YAML::Node& value) {
  if (key == "policy") {
    spec.policy = enumerated<Policy>(value, key, parse_policy);
  } else if (key == "mode") {
    spec.mode = enumerated<Mode>(value, key, parse_mode);
  } else if (key == "sample_interval") {
    spec.sample_interval = seconds(value, key);
  } else if (key == "output_dir") {
    spec.output_dir = scalar(value, key);
  } else if (key == "seed") {
    spec.seed = unsigned_integer(value, key);
  } else if (key == "sm_count") {
    spec.sm_count = static_cast<int>(integer(value, key));
  } else if (key == "max_concurrency") {
    spec.max_concurrency = static_cast<int>(integer(value, key));
  } else if (key == "on_failure") {
    spec.on_failure = enumerated<FailurePolicy>(value, key, parse_failure_policy);
  }
}

void add_node(BenchmarkSpec& spec, WorkflowNodeSpec node, const YAML::Node& where_node) {
  if (spec.find_node(node.node_id)) {
    throw SchemaError("duplicate workflow node '" + node.node_id + "'" + where(where_node));
  }
  spec.workflow.push_back(std::move(node));
}

void merge_document(BenchmarkSpec& spec, const YAML::Node& doc, const std::filesystem::path& base_dir) {
  if (doc.IsNull()) return;
  if (!doc.IsMap()) throw SchemaError("top level must be a mapping" + where(doc));
  for (const auto& kv : doc) {
    const auto key = kv.first.Scalar();
    const auto& value = kv.second;
    if (key == "workflows") {
      if (value.IsNull()) continue;
      if (!value.IsMap()) throw SchemaError("workflows: expected a mapping" + where(value));
      for (const auto& nk : value) add_node(spec, parse_node(nk.first.Scalar(), nk.second), nk.first);
    } else if (kOptionKeys.count(key) && !value.IsMap()) {
      parse_option(spec, key, value);
    } else if (value.IsMap() && value["uses"]) {
      // Split-file layout: workflow nodes at the top level.
      add_node(spec, parse_node(key, value), kv.first);
    } else if (value.IsMap()) {
      if (spec.tasks.count(key)) throw SchemaError("duplicate task '" + key + "'" + where(kv.first));
      spec.tasks.emplace(key, parse_task(key, value, base_dir));
    } else {
      throw SchemaError("unknown key '" + key + "'" + where(kv.first));
    }
  }
}

void check_references(const BenchmarkSpec& spec) {
  for (const auto& node : spec.workflow) {
    if (!spec.tasks.count(node.uses)) {
      throw ReferenceError("workflow node '" + node.node_id + "' uses undeclared task '" + node.uses + "'");
    }
    for (const auto& dep : node.depend_on) {
      if (!spec.find_node(dep)) {
        throw ReferenceError("workflow node '" + node.node_id + "' depends on undeclared node '" + dep + "'");
      }
    }
  }
}

// ---------------------------------------------------------------- emitting

void emit_kernels(YAML::Emitter& out, const std::vector<KernelShape>& kernels) {
  out << YAML::BeginSeq;
  for (const auto& k : kernels) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "duration" << YAML::Value << format_nanos(k.duration);
    out << YAML::Key << "sm_demand" << YAML::Value << format_double(k.sm_demand);
    out << YAML::Key << "repeat" << YAML::Value << k.repeat;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void emit_profile(YAML::Emitter& out, const WorkloadProfile& p) {
  out << YAML::BeginMap;
  out << YAML::Key << "prologue" << YAML::Value;
  emit_kernels(out, p.prologue);
  out << YAML::Key << "unit" << YAML::Value;
  emit_kernels(out, p.unit);
  out << YAML::Key << "units" << YAML::Value << p.units;
  out << YAML::Key << "period" << YAML::Value << format_nanos(p.period);
  out << YAML::Key << "sleep" << YAML::Value << format_nanos(p.sleep);
  out << YAML::Key << "setup" << YAML::Value << format_nanos(p.setup);
  out << YAML::Key << "cleanup" << YAML::Value << format_nanos(p.cleanup);
  out << YAML::Key << "jitter" << YAML::Value << format_double(p.jitter);
  out << YAML::EndMap;
}

void emit_slo(YAML::Emitter& out, const SloSpec& slo) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SloNone>) {
          out << YAML::Null;
        } else if constexpr (std::is_same_v<T, SloLatencyPair>) {
          out << YAML::Flow << YAML::BeginMap << YAML::Key << "ttft" << YAML::Value
              << format_seconds(v.ttft) << YAML::Key << "tpot" << YAML::Value
              << format_seconds(v.tpot) << YAML::EndMap;
        } else if constexpr (std::is_same_v<T, SloStepTime>) {
          out << YAML::Flow << YAML::BeginMap << YAML::Key << "step" << YAML::Value
              << format_seconds(v.step) << YAML::EndMap;
        } else {
          out << YAML::Flow << YAML::BeginMap << YAML::Key << "segment" << YAML::Value
              << format_seconds(v.segment) << YAML::EndMap;
        }
      },
      slo);
}

void emit_task(YAML::Emitter& out, const TaskDefinition& t) {
  out << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << std::string(to_string(t.app_kind));
  out << YAML::Key << "model" << YAML::Value << YAML::DoubleQuoted << t.model;
  out << YAML::Key << "num_requests" << YAML::Value << t.num_requests;
  out << YAML::Key << "device" << YAML::Value << std::string(to_string(t.device));
  out << YAML::Key << "mps" << YAML::Value << t.mps_share;
  if (!std::holds_alternative<SloNone>(t.slo)) {
    out << YAML::Key << "slo" << YAML::Value;
    emit_slo(out, t.slo);
  }
  if (t.dataset) out << YAML::Key << "dataset" << YAML::Value << YAML::DoubleQuoted << *t.dataset;
  if (t.server) out << YAML::Key << "server" << YAML::Value << YAML::DoubleQuoted << *t.server;
  if (t.kv_cache != KvCache::unspecified) {
    out << YAML::Key << "kv_cache" << YAML::Value << std::string(to_string(t.kv_cache));
  }
  if (t.endpoint) out << YAML::Key << "endpoint" << YAML::Value << YAML::DoubleQuoted << *t.endpoint;
  if (!t.launch.empty()) {
    out << YAML::Key << "launch" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& a : t.launch) out << YAML::DoubleQuoted << a;
    out << YAML::EndSeq;
  }
  if (t.steps) out << YAML::Key << "steps" << YAML::Value << *t.steps;
  out << YAML::Key << "timeout" << YAML::Value << format_seconds(t.timeout);
  out << YAML::Key << "profile" << YAML::Value;
  emit_profile(out, t.profile);
  out << YAML::EndMap;
}

}  // namespace

std::string describe(const SloSpec& slo) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SloNone>) {
          return "none";
        } else if constexpr (std::is_same_v<T, SloLatencyPair>) {
          return "ttft<=" + format_seconds(v.ttft) + " tpot<=" + format_seconds(v.tpot);
        } else if constexpr (std::is_same_v<T, SloStepTime>) {
          return "step<=" + format_seconds(v.step);
        } else {
          return "segment<=" + format_seconds(v.segment);
        }
      },
      slo);
}

WorkloadProfile default_profile(AppKind kind) {
  constexpr Nanos ms = 1'000'000;
  WorkloadProfile p;
  switch (kind) {
    case AppKind::chatbot:
      p.prologue = {{40 * ms, 60.0, 1}};  // prefill
      p.unit = {{30 * ms, 25.0, 1}};      // one decode step per token
      p.units = 31;
      p.setup = 2000 * ms;
      p.cleanup = 200 * ms;
      break;
    case AppKind::deep_research:
      p.prologue = {{50 * ms, 60.0, 1}};
      p.unit = {{80 * ms, 60.0, 1}};
      p.units = 150;
      p.setup = 2000 * ms;
      p.cleanup = 200 * ms;
      break;
    case AppKind::imagegen:
      p.prologue = {{50 * ms, 40.0, 1}};  // text encoder
      p.unit = {{600 * ms, 100.0, 1}};    // one denoising step
      p.units = 8;
      p.setup = 3000 * ms;
      p.cleanup = 300 * ms;
      break;
    case AppKind::live_captions:
      // encoder pass, then many small decode kernels per segment
      p.unit = {{100 * ms, 50.0, 1}, {5 * ms, 3.0, 20}};
      p.units = 30;
      p.period = 2000 * ms;
      p.setup = 1000 * ms;
      p.cleanup = 100 * ms;
      break;
    case AppKind::synthetic:
      p.unit = {{10 * ms, 10.0, 1}};
      p.units = 1;
      p.sleep = 10 * ms;
      break;
  }
  return p;
}

const TaskDefinition& BenchmarkSpec::task_of(const WorkflowNodeSpec& node) const {
  auto it = tasks.find(node.uses);
  if (it == tasks.end()) throw ReferenceError("undeclared task '" + node.uses + "'");
  return it->second;
}

const WorkflowNodeSpec* BenchmarkSpec::find_node(const std::string& node_id) const {
  auto it = std::find_if(workflow.begin(), workflow.end(),
                         [&](const WorkflowNodeSpec& n) { return n.node_id == node_id; });
  return it == workflow.end() ? nullptr : &*it;
}

BenchmarkSpec parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(text);
  } catch (const YAML::ParserException& e) {
    throw SyntaxError(std::string("malformed YAML: ") + e.what());
  }
  BenchmarkSpec spec;
  try {
    for (const auto& doc : docs) merge_document(spec, doc, base_dir);
  } catch (const YAML::Exception& e) {
    throw SchemaError(e.what());
  }
  check_references(spec);
  return spec;
}

BenchmarkSpec load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError("cannot read config file '" + file.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), file.parent_path());
}

std::string serialize_config(const BenchmarkSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "policy" << YAML::Value << std::string(to_string(spec.policy));
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(spec.mode));
  out << YAML::Key << "sample_interval" << YAML::Value << format_seconds(spec.sample_interval);
  if (!spec.output_dir.empty()) {
    out << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << spec.output_dir;
  }
  out << YAML::Key << "seed" << YAML::Value << spec.seed;
  out << YAML::Key << "sm_count" << YAML::Value << spec.sm_count;
  out << YAML::Key << "max_concurrency" << YAML::Value << spec.max_concurrency;
  out << YAML::Key << "on_failure" << YAML::Value << std::string(to_string(spec.on_failure));
  for (const auto& [name, task] : spec.tasks) {
    out << YAML::Key << YAML::DoubleQuoted << name << YAML::Value;
    emit_task(out, task);
  }
  out << YAML::Key << "workflows" << YAML::Value << YAML::BeginMap;
  for (const auto& node : spec.workflow) {
    out << YAML::Key << YAML::DoubleQuoted << node.node_id << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "uses" << YAML::Value << YAML::DoubleQuoted << node.uses;
    if (!node.depend_on.empty()) {
      out << YAML::Key << "depend_on" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (const auto& d : node.depend_on) out << YAML::DoubleQuoted << d;
      out << YAML::EndSeq;
    }
    if (node.background) out << YAML::Key << "background" << YAML::Value << true;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DanglingReference: return "DanglingReference";
    case ViolationKind::SloMismatch: return "SloMismatch";
    case ViolationKind::InvalidValue: return "InvalidValue";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::DependencyCycle: return "DependencyCycle";
    case ViolationKind::ConfigConflict: return "ConfigConflict";
    case ViolationKind::MissingEndpoint: return "MissingEndpoint";
  }
  return "?";
}

bool slo_matches_kind(AppKind kind, const SloSpec& slo) {
  if (std::holds_alternative<SloNone>(slo)) return true;
  switch (kind) {
    case AppKind::chatbot: return std::holds_alternative<SloLatencyPair>(slo);
    case AppKind::imagegen: return std::holds_alternative<SloStepTime>(slo);
    case AppKind::live_captions:
    case AppKind::synthetic: return std::holds_alternative<SloSegmentTime>(slo);
    case AppKind::deep_research: return false;
  }
  return false;
}

namespace {

void check_profile(const TaskDefinition& t, std::vector<Violation>& out) {
  auto bad = [&](const std::string& msg) {
    out.push_back({ViolationKind::InvalidValue, t.name, "profile: " + msg});
  };
  const auto& p = t.profile;
  for (const auto* list : {&p.prologue, &p.unit}) {
    for (const auto& k : *list) {
      if (k.duration <= 0) bad("kernel duration must be positive");
      if (!(k.sm_demand > 0.0 && k.sm_demand <= 100.0)) bad("sm_demand must be in (0, 100]");
      if (k.repeat < 1) bad("repeat must be at least 1");
    }
  }
  if (p.units < 0) bad("units must be non-negative");
  if (p.period < 0 || p.sleep < 0 || p.setup < 0 || p.cleanup < 0) bad("durations must be non-negative");
  if (!(p.jitter >= 0.0 && p.jitter < 1.0)) bad("jitter must be in [0, 1)");
  if (t.app_kind == AppKind::live_captions && p.period <= 0) bad("live_captions needs a positive period");
}

void check_slo_values(const TaskDefinition& t, std::vector<Violation>& out) {
  const bool positive = std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SloNone>) return true;
        else if constexpr (std::is_same_v<T, SloLatencyPair>) return v.ttft > 0 && v.tpot > 0;
        else if constexpr (std::is_same_v<T, SloStepTime>) return v.step > 0;
        else return v.segment > 0;
      },
      t.slo);
  if (!positive) out.push_back({ViolationKind::InvalidValue, t.name, "SLO thresholds must be positive"});
  if (!slo_matches_kind(t.app_kind, t.slo)) {
    out.push_back({ViolationKind::SloMismatch, t.name,
                   "SLO '" + describe(t.slo) + "' does not fit a " + std::string(to_string(t.app_kind)) + " task"});
  }
}

}  // namespace

std::vector<Violation> validate_spec(const BenchmarkSpec& spec) {
  std::vector<Violation> out;

  if (!(spec.sample_interval > 0)) {
    out.push_back({ViolationKind::InvalidValue, "sample_interval", "must be positive"});
  }
  if (spec.sm_count < 1) out.push_back({ViolationKind::InvalidValue, "sm_count", "must be at least 1"});
  if (spec.max_concurrency < 0) {
    out.push_back({ViolationKind::InvalidValue, "max_concurrency", "must be non-negative"});
  }

  std::set<std::string> used_tasks;
  for (const auto& n : spec.workflow) used_tasks.insert(n.uses);

  for (const auto& [name, t] : spec.tasks) {
    if (t.name != name) {
      out.push_back({ViolationKind::InvalidValue, name, "task name does not match its key"});
    }
    if (t.num_requests < 1) out.push_back({ViolationKind::InvalidValue, name, "num_requests must be >= 1"});
    if (t.mps_share <= 0 || t.mps_share > 100) {
      out.push_back({ViolationKind::InvalidValue, name, "mps must be in (0, 100]"});
    }
    if (!(t.timeout > 0)) out.push_back({ViolationKind::InvalidValue, name, "timeout must be positive"});
    if (t.steps && *t.steps < 1) out.push_back({ViolationKind::InvalidValue, name, "steps must be >= 1"});
    check_slo_values(t, out);
    check_profile(t, out);
  }

  // Shared servers: one model, compatible KV-cache placement.
  std::map<std::string, std::vector<const TaskDefinition*>> sharers;
  for (const auto& n : spec.workflow) {
    auto it = spec.tasks.find(n.uses);
    if (it != spec.tasks.end() && it->second.server) sharers[*it->second.server].push_back(&it->second);
  }
  for (const auto& [server, tasks] : sharers) {
    bool kv_cpu = false, kv_gpu = false, model_conflict = false;
    for (const auto* t : tasks) {
      kv_cpu |= t->kv_cache == KvCache::cpu;
      kv_gpu |= t->kv_cache == KvCache::gpu;
      model_conflict |= t->model != tasks.front()->model;
    }
    if (kv_cpu && kv_gpu) {
      out.push_back({ViolationKind::ConfigConflict, server, "sharers disagree on KV-cache placement"});
    }
    if (model_conflict) out.push_back({ViolationKind::ConfigConflict, server, "sharers name different models"});
  }

  std::set<std::string> seen;
  for (const auto& n : spec.workflow) {
    if (!seen.insert(n.node_id).second) {
      out.push_back({ViolationKind::DuplicateId, n.node_id, "duplicate workflow node id"});
    }
    if (!spec.tasks.count(n.uses)) {
      out.push_back({ViolationKind::DanglingReference, n.node_id, "uses undeclared task '" + n.uses + "'"});
    }
    for (const auto& d : n.depend_on) {
      if (!spec.find_node(d)) {
        out.push_back({ViolationKind::DanglingReference, n.node_id, "depends on undeclared node '" + d + "'"});
      }
    }
  }

  // depend_on cycles (three-colour DFS over declared nodes)
  std::map<std::string, int> colour;
  std::function<bool(const WorkflowNodeSpec&)> visit = [&](const WorkflowNodeSpec& n) {
    colour[n.node_id] = 1;
    for (const auto& d : n.depend_on) {
      const auto* dep = spec.find_node(d);
      if (!dep) continue;
      if (colour[d] == 1) return true;
      if (colour[d] == 0 && visit(*dep)) return true;
    }
    colour[n.node_id] = 2;
    return false;
  };
  for (const auto& n : spec.workflow) {
    if (colour[n.node_id] == 0 && visit(n)) {
      out.push_back({ViolationKind::DependencyCycle, n.node_id, "depend_on forms a cycle"});
      break;
    }
  }
  return out;
}

std::vector<Violation> check_live_requirements(const BenchmarkSpec& spec) {
  std::set<std::string> used;
  for (const auto& n : spec.workflow) used.insert(n.uses);
  std::vector<Violation> out;
  for (const auto& [name, t] : spec.tasks) {
    if (!used.count(name) || t.app_kind == AppKind::synthetic) continue;
    if (!t.endpoint && t.launch.empty()) {
      out.push_back({ViolationKind::MissingEndpoint, name, "live mode needs an 'endpoint' or a 'launch' command"});
    }
  }
  return out;
}

}  // namespace genaibench
