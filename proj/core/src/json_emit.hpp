#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "robrank/format.hpp"

namespace robrank::detail {

using Json = nlohmann::ordered_json;

inline void append_json_string(std::string& out, const std::string& s) {
  out.push_back('"');
  for (unsigned char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out.push_back(static_cast<char>(ch));
        }
    }
  }
  out.push_back('"');
}

// Reals as %.17g; non-finite values become null and signed zero prints as 0.
inline void append_json_real(std::string& out, double x) {
  if (!std::isfinite(x)) {
    out += "null";
  } else if (x == 0.0) {
    out += "0";
  } else {
    out += format_real(x);
  }
}

inline void append_json(std::string& out, const Json& j, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
  const std::string close(2 * static_cast<std::size_t>(depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        append_json_string(out, it.key());
        out += ": ";
        append_json(out, it.value(), depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        append_json(out, v, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::string: append_json_string(out, j.get<std::string>()); return;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; return;
    case Json::value_t::number_integer: out += std::to_string(j.get<long long>()); return;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<unsigned long long>()); return;
    case Json::value_t::number_float: append_json_real(out, j.get<double>()); return;
    default: out += "null"; return;
  }
}

inline std::string dump_json(const Json& j) {
  std::string out;
  append_json(out, j, 0);
  out.push_back('\n');
  return out;
}

}  // namespace robrank::detail
