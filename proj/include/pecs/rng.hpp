#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace pecs {

/// SplitMix64 (Steele, Lea, Flood 2014). Chosen over the std engines and
/// distributions because those are not specified bit-for-bit across standard
/// libraries, and generated tasks must be identical everywhere for a seed.
///
///   state += 0x9E3779B97F4A7C15
///   z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased draw from [0, bound) by rejection; bound must be non-zero.
  std::uint64_t uniform(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace pecs
