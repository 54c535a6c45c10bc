#pragma once

#include <functional>
#include <string>

namespace marginalis {

// Warnings go through a process-wide sink (stderr by default). Tests swap the
// sink to capture messages; set_warning_sink returns the previous sink.
using WarningSink = std::function<void(const std::string&)>;

WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace marginalis
