// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace vge {

/// Shortest round-trip decimal form of a double ('.' decimal point,
/// locale-independent), so CSV output parses back losslessly.
std::string fmt_double(double v);

}  // namespace vge
