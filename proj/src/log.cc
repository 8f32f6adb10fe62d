#include "casefold/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace casefold {
namespace {

std::atomic<int> g_verbosity{0};
std::mutex g_mutex;

void emit(std::string_view prefix, std::string_view message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << prefix << message << '\n';
}

}  // namespace

void set_verbosity(int level) { g_verbosity = level; }
int verbosity() { return g_verbosity; }

void log_warning(std::string_view message) { emit("warning: ", message); }

void log_info(std::string_view message) {
  if (g_verbosity >= 1) emit("", message);
}

void log_debug(std::string_view message) {
  if (g_verbosity >= 2) emit("", message);
}

}  // namespace casefold
