// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace vge {

/// Counter-based random stream. Every draw is a pure function of
/// (seed, counter), so a stream can be reconstructed from those two
/// integers anywhere in a run. derive() builds independent substreams
/// from a master seed and a tag, which is how training keeps noise
/// reproducible across checkpoint/resume boundaries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static RngStream derive(std::uint64_t seed, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller; consumes two counter slots.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace vge
