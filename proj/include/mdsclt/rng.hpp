#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace mdsclt {

// Counter-based random streams. A stream is a 64-bit key derived from a seed
// and a list of integer tags; draw k of the stream is a pure function of
// (key, k). Nothing is shared between streams, so generating entries in any
// order or on any thread gives identical values.

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (auto t : tags) k = mix64(k ^ mix64(t + 0x3c6ef372fe94f82bULL));
  return k;
}

class Stream {
public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}
  constexpr Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept
      : key_(derive_key(seed, tags)) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter ^ 0xa54ff53a5f1d36f1ULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal from draws (2c, 2c+1) via Box-Muller.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = 1.0 - uniform(2 * counter); // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t key_;
};

} // namespace mdsclt
