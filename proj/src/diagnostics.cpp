#include "marginalis/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace marginalis {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

}  // namespace

WarningSink set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex());
    auto previous = std::move(sink());
    sink() = std::move(s);
    return previous;
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

}  // namespace marginalis
