#include "dcrec/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace dcrec::log {

namespace {

std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;

void emit(Level at, const char* tag, std::string_view msg) {
  if (at < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }
void error(std::string_view msg) { emit(Level::Error, "error", msg); }

}  // namespace dcrec::log
