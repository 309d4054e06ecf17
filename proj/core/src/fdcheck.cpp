// SPDX-License-Identifier: Apache-2.0
#include "vge/fdcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vge/errors.hpp"
#include "vge/tape.hpp"

namespace vge {

double finite_difference_check(const std::function<Tensor(const Tensor&)>& f,
                               const Tensor& x, double h) {
  if (!(h > 0)) throw ContractError("finite_difference_check requires h > 0");

  Tensor analytic;
  {
    Tape tape;
    Tensor leaf = tape.watch("x", x);
    Tensor loss = f(leaf);
    if (loss.numel() != 1) throw ContractError("f must return a scalar");
    analytic = tape.backward(loss).at("x");
  }

  auto eval = [&](const Tensor& point) {
    Tensor out = f(point);
    if (out.numel() != 1) throw ContractError("f must return a scalar");
    return out.item();
  };

  double max_err = 0;
  Tensor probe = x.detached();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = probe.data()[static_cast<std::size_t>(i)];
    probe.data()[static_cast<std::size_t>(i)] = orig + h;
    const double up = eval(probe);
    probe.data()[static_cast<std::size_t>(i)] = orig - h;
    const double down = eval(probe);
    probe.data()[static_cast<std::size_t>(i)] = orig;
    const double central = (up - down) / (2.0 * h);
    const double a = analytic.data()[static_cast<std::size_t>(i)];
    max_err = std::max(max_err, std::abs(a - central) / (std::abs(central) + 1e-8));
  }
  return max_err;
}

}  // namespace vge
