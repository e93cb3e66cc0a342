#ifndef KORP_LOG_HPP
#define KORP_LOG_HPP

#include <sstream>
#include <string>

namespace korp::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from the KORP_LOG environment variable
// (error|warn|info|debug), default warn. No other knobs.
Level threshold();

void write(Level level, const std::string& msg);

template <typename... Args>
void emit(Level level, Args&&... args) {
    if (level > threshold()) return;
    std::ostringstream os;
    (os << ... << args);
    write(level, os.str());
}

template <typename... Args> void error(Args&&... a) { emit(Level::error, std::forward<Args>(a)...); }
template <typename... Args> void warn(Args&&... a) { emit(Level::warn, std::forward<Args>(a)...); }
template <typename... Args> void info(Args&&... a) { emit(Level::info, std::forward<Args>(a)...); }
template <typename... Args> void debug(Args&&... a) { emit(Level::debug, std::forward<Args>(a)...); }

} // namespace korp::log

#endif
