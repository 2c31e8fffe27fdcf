#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "genaibench/config.hpp"
#include "genaibench/dag.hpp"
#include "genaibench/engine.hpp"
#include "genaibench/error.hpp"
#include "genaibench/metrics.hpp"
#include "genaibench/orchestrator.hpp"
#include "genaibench/simgpu.hpp"
#include "genaibench/trace.hpp"

namespace genaibench::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string file;
  bool dot = false;
  std::string mode;
  std::string policy;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> max_concurrency;
  std::string sample_interval;
  int sm_count = 72;
  std::vector<std::string> shares;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void print_violations(const std::vector<Violation>& violations, Streams& io) {
  for (const auto& v : violations) io.out << to_string(v.kind) << ": " << v.subject << ": " << v.message << "\n";
}

/// Loads, applies `adjust`, validates; prints violations. Returns nullopt when invalid.
std::optional<BenchmarkSpec> load_valid(const std::string& file, Streams& io,
                                        const std::function<void(BenchmarkSpec&)>& adjust = {}) {
  BenchmarkSpec spec;
  try {
    spec = load_config(file);
  } catch (const SyntaxError& e) {
    io.out << "syntax error: " << e.what() << "\n";
    return std::nullopt;
  } catch (const SchemaError& e) {
    io.out << "schema error: " << e.what() << "\n";
    return std::nullopt;
  } catch (const ReferenceError& e) {
    io.out << "DanglingReference: " << e.what() << "\n";
    return std::nullopt;
  }
  if (adjust) adjust(spec);
  const auto violations = validate_spec(spec);
  print_violations(violations, io);
  if (!violations.empty()) return std::nullopt;
  return spec;
}

int cmd_validate(const Options& o, Streams& io) { return load_valid(o.file, io) ? kOk : kValidation; }

int cmd_graph(const Options& o, Streams& io) {
  auto spec = load_valid(o.file, io);
  if (!spec) return kValidation;
  const Dag dag = build_dag(*spec);
  if (o.dot) {
    io.out << to_dot(dag);
    return kOk;
  }
  for (const auto& n : dag.nodes()) io.out << n.id << (n.background ? " (background)" : "") << "\n";
  for (const auto& [from, to] : dag.edges()) io.out << from << " -> " << to << "\n";
  return kOk;
}

void emit_report(const RunTrace& trace, const std::string& dir, Streams& io) {
  const Report report = build_report(trace);
  write_report_files(report, trace, dir);
  io.out << human_summary(report, io.color);
}

int cmd_run(const Options& o, Streams& io, std::stop_token abort) {
  auto spec = load_valid(o.file, io, [&](BenchmarkSpec& s) {
    if (!o.mode.empty()) s.mode = *parse_mode(o.mode);
    if (!o.policy.empty()) s.policy = *parse_policy(o.policy);
    if (o.seed) s.seed = *o.seed;
    if (o.max_concurrency) s.max_concurrency = *o.max_concurrency;
    if (!o.sample_interval.empty()) s.sample_interval = *parse_seconds(o.sample_interval);
  });
  if (!spec) return kValidation;
  if (spec->mode == Mode::live) {
    const auto missing = check_live_requirements(*spec);
    print_violations(missing, io);
    if (!missing.empty()) return kValidation;
  }
  const std::string out = !o.out.empty() ? o.out : !spec->output_dir.empty() ? spec->output_dir : "genaibench-out";

  RunOptions options;
  options.abort = abort;
  RunTrace trace;
  int code = kOk;
  try {
    trace = run(*spec, options);
  } catch (const InterruptedError& e) {
    trace = e.trace();
    io.err << "interrupted; partial trace written to " << out << "\n";
    code = kRuntime;
  }
  write_trace(trace, out);
  emit_report(trace, out, io);
  if (code == kOk && trace.header.status != "complete") {
    io.err << "run " << trace.header.status << "; see " << (fs::path(out) / "trace.json").string() << "\n";
    code = kRuntime;
  }
  return code;
}

int cmd_report(const Options& o, Streams& io) {
  const RunTrace trace = read_trace(o.file);
  emit_report(trace, o.out.empty() ? o.file : o.out, io);
  return kOk;
}

int cmd_sim(const Options& o, Streams& io) {
  const auto kernels = parse_kernel_trace(slurp(o.file));
  const Policy policy = o.policy.empty() ? Policy::greedy : *parse_policy(o.policy);
  SimDevice device;
  device.sm_count = o.sm_count;
  if (policy == Policy::static_partition) {
    std::map<std::string, int> shares;
    for (const auto& s : o.shares) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw PreconditionError("--share expects APP=PERCENT, got '" + s + "'");
      shares[s.substr(0, eq)] = std::stoi(s.substr(eq + 1));
    }
    if (shares.empty()) {
      std::vector<std::string> apps;
      for (const auto& k : kernels) {
        if (std::find(apps.begin(), apps.end(), k.app) == apps.end()) apps.push_back(k.app);
      }
      shares = assign_shares(policy, apps);
    }
    for (const auto& [app, share] : shares) apply_placement(app, share, policy, Mode::simulated, device);
  }
  const SimResult result = simulate(device, kernels, policy);
  const std::string json = sim_result_to_json(result, device);
  if (o.out.empty()) {
    io.out << json;
    return kOk;
  }
  fs::create_directories(o.out);
  spit(fs::path(o.out) / "sim_result.json", json);
  const double interval = o.sample_interval.empty() ? 0.1 : *parse_seconds(o.sample_interval);
  auto samples = synth_utilization(result, device, to_nanos(interval));
  for (auto& s : samples) s.source = "simgpu";
  spit(fs::path(o.out) / "samples.csv", samples_to_csv(samples, {}));
  for (const auto& [app, t] : result.app_completion) io.out << app << " completes at " << format_nanos(t) << "\n";
  io.out << "makespan " << format_nanos(result.makespan()) << "\n";
  return kOk;
}

bool valid_duration(const std::string& s) { return s.empty() || parse_seconds(s).value_or(0) > 0; }

}  // namespace

int run_cli(const std::vector<std::string>& args, Streams io, std::stop_token abort) {
  CLI::App app{"Benchmark harness for concurrent generative AI workloads", "genaibench"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config", o.file, "YAML configuration")->required();

  auto* graph = app.add_subcommand("graph", "Print the execution graph");
  graph->add_option("config", o.file, "YAML configuration")->required();
  graph->add_flag("--dot", o.dot, "Graphviz DOT output");

  auto* runc = app.add_subcommand("run", "Execute a workflow");
  runc->add_option("config", o.file, "YAML configuration")->required();
  runc->add_option("--mode", o.mode, "live or sim")->check(CLI::IsMember({"live", "sim", "simulated"}));
  runc->add_option("--policy", o.policy, "greedy or partition")
      ->check(CLI::IsMember({"greedy", "partition", "static_partition"}));
  runc->add_option("--seed", o.seed, "Random seed");
  runc->add_option("--out", o.out, "Output directory");
  runc->add_option("--max-concurrency", o.max_concurrency, "Max exec nodes in flight (0 = unbounded)")
      ->check(CLI::NonNegativeNumber);
  runc->add_option("--sample-interval", o.sample_interval, "Monitor interval, e.g. 100ms");

  auto* report = app.add_subcommand("report", "Regenerate a report from trace files");
  report->add_option("trace-dir", o.file, "Directory written by run")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", o.out, "Output directory (defaults to trace-dir)");

  auto* sim = app.add_subcommand("sim", "Replay a kernel trace on the simulated GPU");
  sim->add_option("kernels", o.file, "Kernel trace (JSONL)")->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", o.policy, "greedy or partition")
      ->check(CLI::IsMember({"greedy", "partition", "static_partition"}));
  sim->add_option("--sm-count", o.sm_count, "SMs on the device")->check(CLI::PositiveNumber);
  sim->add_option("--share", o.shares, "APP=PERCENT partition share (repeatable)");
  sim->add_option("--out", o.out, "Output directory");
  sim->add_option("--sample-interval", o.sample_interval, "Utilization interval, e.g. 100ms");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << e.what() << "\n";
    return kUsage;
  }
  if (!valid_duration(o.sample_interval)) {
    io.err << "--sample-interval must be a positive duration\n";
    return kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, io);
    if (graph->parsed()) return cmd_graph(o, io);
    if (runc->parsed()) return cmd_run(o, io, abort);
    if (report->parsed()) return cmd_report(o, io);
    if (sim->parsed()) return cmd_sim(o, io);
  } catch (const UnsupportedPlatform& e) {
    io.err << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace genaibench::cli
