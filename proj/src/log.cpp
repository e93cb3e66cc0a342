#include "korp/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace korp::log {

Level threshold() {
    static const Level lvl = [] {
        const char* env = std::getenv("KORP_LOG");
        if (!env) return Level::warn;
        const std::string s(env);
        if (s == "error") return Level::error;
        if (s == "warn") return Level::warn;
        if (s == "info") return Level::info;
        if (s == "debug") return Level::debug;
        return Level::warn;
    }();
    return lvl;
}

void write(Level level, const std::string& msg) {
    static std::mutex mu;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[korp:" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

} // namespace korp::log
