#pragma once

#include <cctype>
#include <cstdio>
#include <string>

namespace robrank {

/// Formats a double with 17 significant digits so that parsing the text
/// reproduces the exact value.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Quotes a CSV field when it holds a delimiter, quote, line break or
/// surrounding whitespace.
inline std::string csv_quote(const std::string& s) {
  const bool padded = !s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) ||
                                     std::isspace(static_cast<unsigned char>(s.back())));
  if (s.find_first_of(",\"\n\r") == std::string::npos && !padded) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += '"';
  return out;
}

}  // namespace robrank
