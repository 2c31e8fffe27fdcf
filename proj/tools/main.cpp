#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "cli.hpp"

namespace {

std::stop_source g_abort;
volatile std::sig_atomic_t g_signalled = 0;

extern "C" void on_signal(int) { g_signalled = 1; }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  // Signal handlers cannot touch stop_source safely; a watcher forwards.
  std::jthread watcher([](std::stop_token done) {
    while (!done.stop_requested()) {
      if (g_signalled) {
        g_abort.request_stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });

  const bool color = std::getenv("NO_COLOR") == nullptr && ::isatty(STDOUT_FILENO);
  std::vector<std::string> args(argv + 1, argv + argc);
  return genaibench::cli::run_cli(args, {std::cout, std::cerr, color}, g_abort.get_token());
}
