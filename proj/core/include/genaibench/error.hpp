#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace genaibench {

/// Base class for every error the harness raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GENAIBENCH_DEFINE_ERROR(Name)       \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// config
GENAIBENCH_DEFINE_ERROR(SyntaxError);
GENAIBENCH_DEFINE_ERROR(SchemaError);
GENAIBENCH_DEFINE_ERROR(ReferenceError);

// dag
GENAIBENCH_DEFINE_ERROR(OrderingError);
GENAIBENCH_DEFINE_ERROR(PreconditionError);

// engine / adapters
GENAIBENCH_DEFINE_ERROR(AdapterNotFound);
GENAIBENCH_DEFINE_ERROR(LaunchError);
GENAIBENCH_DEFINE_ERROR(SetupFailure);
GENAIBENCH_DEFINE_ERROR(ConnectionError);
GENAIBENCH_DEFINE_ERROR(ConfigConflict);

// orchestrator
GENAIBENCH_DEFINE_ERROR(UnsupportedPlatform);
GENAIBENCH_DEFINE_ERROR(EmptySet);

// simgpu
GENAIBENCH_DEFINE_ERROR(InfeasibleKernel);

// monitor
GENAIBENCH_DEFINE_ERROR(ParseError);
GENAIBENCH_DEFINE_ERROR(CollectorInitError);

// metrics
GENAIBENCH_DEFINE_ERROR(NoTokens);
GENAIBENCH_DEFINE_ERROR(VariantMismatch);
GENAIBENCH_DEFINE_ERROR(NoSlo);

#undef GENAIBENCH_DEFINE_ERROR

/// A dependency cycle; `cycle` starts and ends with the same node id.
class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> cycle);

  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

}  // namespace genaibench
