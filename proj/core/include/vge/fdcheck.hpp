// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "vge/tensor.hpp"

namespace vge {

/// Central finite-difference verification of the tape gradient.
///
/// `f` must map a tensor to a scalar tensor using the engine primitives
/// (so the analytic gradient can be taken when its argument is watched,
/// and plain values fall out when it is not). Returns
///   max_i |analytic_i - central_i| / (|central_i| + 1e-8)
/// with central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
/// h must be positive.
double finite_difference_check(const std::function<Tensor(const Tensor&)>& f,
                               const Tensor& x, double h);

}  // namespace vge
