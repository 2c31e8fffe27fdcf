#pragma once

#include <chrono>

#include "genaibench/types.hpp"

namespace genaibench {

/// Monotonic clock anchored at construction (the run start).
class RunClock {
 public:
  using Steady = std::chrono::steady_clock;

  RunClock() : start_(Steady::now()) {}

  Nanos now_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Steady::now() - start_).count();
  }
  double now() const { return to_seconds(now_ns()); }
  Steady::time_point at(double seconds) const {
    return start_ + std::chrono::duration_cast<Steady::duration>(std::chrono::duration<double>(seconds));
  }
  Steady::time_point start() const { return start_; }

 private:
  Steady::time_point start_;
};

}  // namespace genaibench
