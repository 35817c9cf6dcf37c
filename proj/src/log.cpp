#include "advfv/log.hpp"

#include <atomic>
#include <iostream>

namespace advfv {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warning)};
}

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
    if (g_level.load() >= static_cast<int>(LogLevel::Warning))
        std::clog << "[advfv] warning: " << message << '\n';
}

void log_info(std::string_view message) {
    if (g_level.load() >= static_cast<int>(LogLevel::Info))
        std::clog << "[advfv] " << message << '\n';
}

}  // namespace advfv
