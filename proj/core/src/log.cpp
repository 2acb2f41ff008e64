#include "lmfcn/log.hpp"

#include <atomic>
#include <iostream>

namespace lmfcn {
namespace {
std::atomic<LogLevel> g_level{LogLevel::warning};

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warning: return "warning";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
  }
  return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load() || level == LogLevel::off) return;
  std::cerr << "[" << level_name(level) << "] " << message << '\n';
}

}  // namespace lmfcn
