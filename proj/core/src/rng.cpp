// SPDX-License-Identifier: Apache-2.0
#include "vge/rng.hpp"

#include <cmath>

namespace vge {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

RngStream RngStream::derive(std::uint64_t seed, std::string_view tag,
                            std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = splitmix64(seed ^ fnv1a(tag));
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ (b * kGolden));
  return RngStream(s);
}

std::uint64_t RngStream::next_u64() {
  return splitmix64(seed_ ^ splitmix64(counter_++ * kGolden));
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next_u64() % span);
}

double RngStream::normal() {
  // Box-Muller; u1 in (0, 1] so the log stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace vge
