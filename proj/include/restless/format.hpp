#pragma once

#include <cstdio>
#include <string>

namespace restless {

// 10 significant digits, the precision used by all emitted CSV files.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace restless
