#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "tse/errors.hpp"

namespace tse {

/// Decimal text with `digits` significant digits; 17 digits
/// round-trip every double exactly.
inline std::string format_general(double value, int digits = 17) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

inline std::string format_scientific(double value, int significant_digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, significant_digits - 1);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

inline unsigned long long parse_unsigned(std::string_view text) {
  unsigned long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw IoError("malformed integer '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace tse
