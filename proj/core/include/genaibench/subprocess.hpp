#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genaibench {

struct SpawnOptions {
  std::vector<std::string> argv;
  std::map<std::string, std::string> extra_env;  // added to the parent's environment
  std::optional<std::filesystem::path> log_file;  // stdout+stderr, appended
  bool capture_stdout = false;                    // readable through read_line()
};

/// A child process. Owning; the destructor terminates a still-running child.
class Subprocess {
 public:
  /// Throws LaunchError if the executable cannot be started.
  static Subprocess spawn(const SpawnOptions& options);

  Subprocess(Subprocess&& other) noexcept;
  Subprocess& operator=(Subprocess&& other) noexcept;
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  ~Subprocess();

  pid_t pid() const { return pid_; }
  bool running();
  /// Exit status if the child has exited (negative signal number if killed).
  std::optional<int> try_wait();
  /// SIGTERM, then SIGKILL after `grace`. Returns the exit status.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(3000));
  /// Next complete stdout line, waiting at most `timeout`.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

 private:
  Subprocess() = default;
  void reset() noexcept;

  pid_t pid_ = -1;
  int stdout_fd_ = -1;
  std::optional<int> status_;
  std::string buffer_;
};

/// Full path of `name` on PATH, if present.
std::optional<std::filesystem::path> find_executable(const std::string& name);

}  // namespace genaibench
