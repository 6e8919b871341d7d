// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Portable deterministic randomness. std::hash and the std distributions are
/// implementation-defined, so manifests keyed on them would not be
/// reproducible across toolchains.

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace vtedit {

inline constexpr std::uint64_t fnv1a64(std::string_view s,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Child generator whose stream is independent of this one's future draws.
  constexpr SplitMix64 split(std::uint64_t key) const noexcept {
    return SplitMix64(splitmix64_mix(state_ ^ splitmix64_mix(key + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform integer in [0, n) by rejection; n must be positive.
  constexpr std::uint64_t uniform_index(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - (max() % n + 1) % n;
    std::uint64_t x = (*this)();
    while (x > limit) x = (*this)();
    return x % n;
  }

  /// Uniform double in [0, 1).
  constexpr double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Combines a base seed with string and integer keys into a derived seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> keys,
                                 std::uint64_t tag = 0) noexcept {
  std::uint64_t h = splitmix64_mix(base ^ 0x5851f42d4c957f2dULL);
  for (auto k : keys) h = splitmix64_mix(h ^ fnv1a64(k));
  return splitmix64_mix(h ^ splitmix64_mix(tag + 1));
}

}  // namespace vtedit
