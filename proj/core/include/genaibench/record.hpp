#pragma once

#include <optional>
#include <string>
#include <vector>

namespace genaibench {

/// One application request. Times are seconds on the run clock (simulated
/// seconds in simulated mode).
struct RequestRecord {
  std::string task_name;
  std::string instance;    // workflow node that issued the request
  std::string request_id;  // unique within the instance
  double t_submit = 0;
  double t_first_output = 0;
  double t_complete = 0;

  std::vector<double> token_times;  // chatbot: arrival of each streamed token
  std::vector<double> step_times;   // imagegen: duration of each denoising step
  std::optional<double> segment_latency;  // live_captions
  std::optional<int> segment_index;

  bool ok = true;
  std::string detail;  // failure reason, or a note such as a fallback flag

  bool operator==(const RequestRecord&) const = default;
};

}  // namespace genaibench
