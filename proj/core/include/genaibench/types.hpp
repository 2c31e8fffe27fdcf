#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace genaibench {

/// Monotonic simulated or measured time in integer nanoseconds.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;

constexpr double to_seconds(Nanos ns) { return static_cast<double>(ns) / 1e9; }
Nanos to_nanos(double seconds);

enum class AppKind { chatbot, deep_research, imagegen, live_captions, synthetic };
enum class Device { cpu, gpu, hybrid };
enum class Policy { greedy, static_partition };
enum class Mode { live, simulated };
enum class KvCache { unspecified, cpu, gpu };
enum class FailurePolicy { cancel_dependents, abort_run };

std::string_view to_string(AppKind kind);
std::string_view to_string(Device device);
std::string_view to_string(Policy policy);
std::string_view to_string(Mode mode);
std::string_view to_string(KvCache kv);
std::string_view to_string(FailurePolicy policy);

// Parsers accept the canonical spelling plus a few aliases ("sim",
// "partition", "DeepResearch"); they return nullopt for anything else.
std::optional<AppKind> parse_app_kind(std::string_view text);
std::optional<Device> parse_device(std::string_view text);
std::optional<Policy> parse_policy(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);
std::optional<KvCache> parse_kv_cache(std::string_view text);
std::optional<FailurePolicy> parse_failure_policy(std::string_view text);

/// Parses "1s", "0.25s", "250ms", "40us", "7ns" or a bare number (seconds).
std::optional<double> parse_seconds(std::string_view text);
/// Same grammar as parse_seconds, rounded to whole nanoseconds.
std::optional<Nanos> parse_nanos(std::string_view text);

/// Shortest text that parse_seconds maps back to exactly `seconds`.
std::string format_seconds(double seconds);
/// Integer duration in the largest unit that divides it ("40ms", "1500us").
std::string format_nanos(Nanos ns);

/// Shortest round-trip decimal for a double.
std::string format_double(double value);

}  // namespace genaibench
