// SPDX-License-Identifier: Apache-2.0
#include "vge/csv.hpp"

#include <charconv>

namespace vge {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace vge
