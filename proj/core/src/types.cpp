#include "genaibench/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "genaibench/error.hpp"

namespace genaibench {

namespace {

std::string normalize(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Unit {
  std::string_view suffix;
  double per_second;  // units per second
  Nanos nanos;
};

// Longest suffixes first so "ms" is not read as "s".
constexpr std::array<Unit, 4> kUnits = {{
    {"ms", 1e3, 1'000'000},
    {"us", 1e6, 1'000},
    {"ns", 1e9, 1},
    {"s", 1.0, kNanosPerSecond},
}};

bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

CycleError::CycleError(std::vector<std::string> cycle)
    : Error([&] {
        std::string msg = "dependency cycle:";
        for (const auto& n : cycle) msg += " " + n;
        return msg;
      }()),
      cycle_(std::move(cycle)) {}

Nanos to_nanos(double seconds) { return static_cast<Nanos>(std::llround(seconds * 1e9)); }

std::string_view to_string(AppKind kind) {
  switch (kind) {
    case AppKind::chatbot: return "chatbot";
    case AppKind::deep_research: return "deep_research";
    case AppKind::imagegen: return "imagegen";
    case AppKind::live_captions: return "live_captions";
    case AppKind::synthetic: return "synthetic";
  }
  return "?";
}

std::string_view to_string(Device device) {
  switch (device) {
    case Device::cpu: return "cpu";
    case Device::gpu: return "gpu";
    case Device::hybrid: return "hybrid";
  }
  return "?";
}

std::string_view to_string(Policy policy) {
  return policy == Policy::greedy ? "greedy" : "static_partition";
}

std::string_view to_string(Mode mode) { return mode == Mode::live ? "live" : "simulated"; }

std::string_view to_string(KvCache kv) {
  switch (kv) {
    case KvCache::unspecified: return "unspecified";
    case KvCache::cpu: return "cpu";
    case KvCache::gpu: return "gpu";
  }
  return "?";
}

std::string_view to_string(FailurePolicy policy) {
  return policy == FailurePolicy::cancel_dependents ? "cancel_dependents" : "abort_run";
}

std::optional<AppKind> parse_app_kind(std::string_view text) {
  const auto n = normalize(text);
  if (n == "chatbot") return AppKind::chatbot;
  if (n == "deepresearch") return AppKind::deep_research;
  if (n == "imagegen") return AppKind::imagegen;
  if (n == "livecaptions") return AppKind::live_captions;
  if (n == "synthetic") return AppKind::synthetic;
  return std::nullopt;
}

std::optional<Device> parse_device(std::string_view text) {
  if (text == "cpu") return Device::cpu;
  if (text == "gpu") return Device::gpu;
  if (text == "hybrid") return Device::hybrid;
  return std::nullopt;
}

std::optional<Policy> parse_policy(std::string_view text) {
  if (text == "greedy") return Policy::greedy;
  if (text == "static_partition" || text == "partition") return Policy::static_partition;
  return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "live") return Mode::live;
  if (text == "simulated" || text == "sim") return Mode::simulated;
  return std::nullopt;
}

std::optional<KvCache> parse_kv_cache(std::string_view text) {
  if (text == "cpu") return KvCache::cpu;
  if (text == "gpu") return KvCache::gpu;
  return std::nullopt;
}

std::optional<FailurePolicy> parse_failure_policy(std::string_view text) {
  if (text == "cancel_dependents") return FailurePolicy::cancel_dependents;
  if (text == "abort_run") return FailurePolicy::abort_run;
  return std::nullopt;
}

std::optional<double> parse_seconds(std::string_view text) {
  text = trim(text);
  for (const auto& unit : kUnits) {
    if (text.size() > unit.suffix.size() && text.ends_with(unit.suffix)) {
      double v = 0;
      if (!parse_number(text.substr(0, text.size() - unit.suffix.size()), v)) return std::nullopt;
      // "250ms" == 0.25 exactly
      return unit.per_second == 1.0 ? v : v / unit.per_second;
    }
  }
  double v = 0;
  if (!parse_number(text, v)) return std::nullopt;
  return v;
}

std::optional<Nanos> parse_nanos(std::string_view text) {
  text = trim(text);
  for (const auto& unit : kUnits) {
    if (text.size() > unit.suffix.size() && text.ends_with(unit.suffix)) {
      double v = 0;
      if (!parse_number(text.substr(0, text.size() - unit.suffix.size()), v)) return std::nullopt;
      return static_cast<Nanos>(std::llround(v * static_cast<double>(unit.nanos)));
    }
  }
  double v = 0;
  if (!parse_number(text, v)) return std::nullopt;
  return to_nanos(v);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_seconds(double seconds) { return format_double(seconds) + "s"; }

std::string format_nanos(Nanos ns) {
  if (ns != 0) {
    if (ns % kNanosPerSecond == 0) return std::to_string(ns / kNanosPerSecond) + "s";
    if (ns % 1'000'000 == 0) return std::to_string(ns / 1'000'000) + "ms";
    if (ns % 1'000 == 0) return std::to_string(ns / 1'000) + "us";
  }
  return std::to_string(ns) + "ns";
}

}  // namespace genaibench
