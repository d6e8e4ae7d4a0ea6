#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lfpca {

// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);

double parse_double(const std::string& text, std::string_view context);
long long parse_integer(const std::string& text, std::string_view context);

}  // namespace lfpca
