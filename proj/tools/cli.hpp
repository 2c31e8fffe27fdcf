#pragma once

#include <iosfwd>
#include <stop_token>
#include <string>
#include <vector>

namespace genaibench::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kUsage = 3 };

struct Streams {
  std::ostream& out;
  std::ostream& err;
  bool color = false;
};

/// Runs one CLI invocation. `args` excludes the program name. `abort`
/// interrupts a running `run`.
int run_cli(const std::vector<std::string>& args, Streams io, std::stop_token abort = {});

}  // namespace genaibench::cli
