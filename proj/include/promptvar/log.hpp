#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace promptvar::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

struct Sink {
    Level min_level = Level::info;
    bool json = false;
    std::ostream* out = &std::cerr;
    // Tests can capture messages instead of printing them.
    std::vector<std::string>* capture = nullptr;
    std::mutex mu;
};

inline Sink& sink() {
    static Sink s;
    return s;
}

inline std::string_view level_name(Level l) {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "info";
}

inline void write(Level level, std::string_view component, const std::string& msg) {
    Sink& s = sink();
    std::lock_guard lock(s.mu);
    if (s.capture != nullptr) s.capture->push_back(std::string(level_name(level)) + ": " + msg);
    if (level < s.min_level || s.out == nullptr) return;
    if (s.json) {
        nlohmann::json j{{"level", level_name(level)}, {"component", component}, {"msg", msg}};
        *s.out << j.dump() << '\n';
    } else {
        *s.out << '[' << level_name(level) << "] " << component << ": " << msg << '\n';
    }
}

inline void debug(std::string_view c, const std::string& m) { write(Level::debug, c, m); }
inline void info(std::string_view c, const std::string& m) { write(Level::info, c, m); }
inline void warn(std::string_view c, const std::string& m) { write(Level::warn, c, m); }
inline void error(std::string_view c, const std::string& m) { write(Level::error, c, m); }

// Redirects log lines into a vector for the lifetime of the guard.
class CaptureGuard {
public:
    CaptureGuard() {
        auto& s = sink();
        std::lock_guard lock(s.mu);
        prev_ = s.capture;
        s.capture = &lines_;
    }
    ~CaptureGuard() {
        auto& s = sink();
        std::lock_guard lock(s.mu);
        s.capture = prev_;
    }
    CaptureGuard(const CaptureGuard&) = delete;
    CaptureGuard& operator=(const CaptureGuard&) = delete;

    const std::vector<std::string>& lines() const { return lines_; }

    bool contains(std::string_view needle) const {
        for (const auto& l : lines_)
            if (l.find(needle) != std::string::npos) return true;
        return false;
    }

private:
    std::vector<std::string> lines_;
    std::vector<std::string>* prev_ = nullptr;
};

}  // namespace promptvar::log
