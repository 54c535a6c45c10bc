#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace marginalis {

// 17 significant digits; parses back to the same double.
std::string format_double(double x);

// The whole field must parse; false otherwise.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::vector<std::string_view> split_csv_line(std::string_view line);

// Write to a sibling temp file, then rename over path.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace marginalis
