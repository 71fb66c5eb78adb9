#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace transdarc {

using LogSink = std::function<void(const std::string&)>;

inline LogSink& log_sink() {
    static LogSink sink = [](const std::string& msg) { std::cerr << msg << '\n'; };
    return sink;
}

inline void set_log_sink(LogSink sink) { log_sink() = std::move(sink); }

inline void log_warning(const std::string& msg) {
    if (log_sink()) log_sink()("warning: " + msg);
}

inline void log_info(const std::string& msg) {
    if (log_sink()) log_sink()(msg);
}

}  // namespace transdarc
