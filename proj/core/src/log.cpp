#include "segaug/log.hpp"

#include <iostream>
#include <mutex>

namespace segaug::log {
namespace {

std::mutex g_mutex;
Level g_level = Level::Info;

void default_sink(Level level, std::string_view message) {
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::clog << '[' << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

Sink& sink() {
  static Sink s = default_sink;
  return s;
}

}  // namespace

Sink set_sink(Sink s) {
  std::lock_guard lock(g_mutex);
  auto previous = std::move(sink());
  sink() = s ? std::move(s) : Sink(default_sink);
  return previous;
}

void set_level(Level level) {
  std::lock_guard lock(g_mutex);
  g_level = level;
}

Level level() {
  std::lock_guard lock(g_mutex);
  return g_level;
}

void write(Level level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (level < g_level) return;
  sink()(level, message);
}

}  // namespace segaug::log
