#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace burden {

// Shortest round-trip formatting so reruns are byte-identical.
inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

// Missing values (unfitted days) become empty fields.
inline void append_optional(std::string& out, double v) {
  if (!std::isnan(v)) append_double(out, v);
}

inline double parse_double(const std::string& field) {
  if (field.empty()) return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{}) throw std::invalid_argument("bad numeric field: " + field);
  return v;
}

}  // namespace burden
