#pragma once

#include <charconv>
#include <string>

namespace tdbem {

// Locale-independent scientific notation with 16 significant digits.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 15);
  return std::string(buf, res.ptr);
}

}  // namespace tdbem
