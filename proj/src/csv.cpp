#include "lfpca/csv.hpp"

#include "lfpca/error.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

namespace lfpca {

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

double parse_double(const std::string& text, std::string_view context) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    fail(ErrorKind::validation, std::string(context) + ": not a number: '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& text, std::string_view context) {
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    fail(ErrorKind::validation, std::string(context) + ": not an integer: '" + text + "'");
  }
  return value;
}

}  // namespace lfpca
