#include <sstream>

#include <json.hpp>

#include "genaibench/error.hpp"
#include "genaibench/simgpu.hpp"

namespace genaibench {

std::vector<SimKernel> parse_kernel_trace(const std::string& text) {
  std::vector<SimKernel> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SimKernel k;
      k.app = j.at("app").get<std::string>();
      k.submit = j.at("submit").get<Nanos>();
      k.duration = j.at("duration").get<Nanos>();
      k.sm_demand = j.at("sm_demand").get<int>();
      out.push_back(std::move(k));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("kernel trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string sim_result_to_json(const SimResult& result, const SimDevice& device) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["format_version"] = kSimResultFormatVersion;
  j["policy"] = std::string(to_string(result.policy));
  j["sm_count"] = device.sm_count;
  ojson parts = ojson::object();
  for (const auto& [app, q] : device.partitions) parts[app] = q;
  j["partitions"] = parts;
  j["makespan_ns"] = result.makespan();
  ojson done = ojson::object();
  for (const auto& [app, t] : result.app_completion) done[app] = t;
  j["app_completion_ns"] = done;
  ojson ks = ojson::array();
  for (std::size_t i = 0; i < result.kernels.size(); ++i) {
    const auto& k = result.kernels[i];
    const auto& t = result.timings[i];
    ks.push_back({{"app", k.app},
                  {"submit_ns", k.submit},
                  {"duration_ns", k.duration},
                  {"sm_demand", k.sm_demand},
                  {"start_ns", t.start},
                  {"end_ns", t.end},
                  {"sms_held", t.sms_held}});
  }
  j["kernels"] = std::move(ks);
  return j.dump(2) + "\n";
}

}  // namespace genaibench
