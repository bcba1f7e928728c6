#pragma once

// Minimal leveled logging to stderr. Level comes from HYPER_RC_LOG
// (error, warn, info, debug); default warn.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace hyper_rc::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level parse_level(std::string_view s, Level fallback = Level::Warn) noexcept
{
    if (s == "error") return Level::Error;
    if (s == "warn" || s == "warning") return Level::Warn;
    if (s == "info") return Level::Info;
    if (s == "debug" || s == "trace") return Level::Debug;
    return fallback;
}

inline Level& threshold()
{
    static Level level = [] {
        const char* env = std::getenv("HYPER_RC_LOG");
        return env ? parse_level(env) : Level::Warn;
    }();
    return level;
}

inline bool enabled(Level l) { return static_cast<int>(l) <= static_cast<int>(threshold()); }

inline void write(Level l, const std::string& msg)
{
    if (!enabled(l)) return;
    static std::mutex mu;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[hyper_rc " << names[static_cast<int>(l)] << "] " << msg << '\n';
}

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

} // namespace hyper_rc::log
