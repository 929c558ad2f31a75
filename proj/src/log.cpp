#include "xg/log.hpp"

#include <atomic>

#include <fmt/core.h>

namespace xg::log {

namespace {

std::atomic<Level> g_threshold{Level::Info};

const char* tag(Level lv) {
  switch (lv) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::ErrorLevel: break;
  }
  return "error";
}

}  // namespace

Level threshold() { return g_threshold.load(std::memory_order_relaxed); }

void set_threshold(Level lv) {
  g_threshold.store(lv, std::memory_order_relaxed);
}

void emit(Level lv, const std::string& msg) {
  if (lv < threshold()) return;
  fmt::print(stderr, "[{}] {}\n", tag(lv), msg);
}

}  // namespace xg::log
