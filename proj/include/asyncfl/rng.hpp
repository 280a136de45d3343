#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace asyncfl {

/// Seed value. All randomness in the library flows from one of these.
struct Seed {
  std::uint64_t value = 0;

  friend constexpr bool operator==(Seed, Seed) = default;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a, 64-bit.
constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Child seed for a (purpose, index) pair. Distinct labels or indices give
/// statistically independent streams.
constexpr Seed derive(Seed parent, std::string_view label, std::uint64_t index = 0) {
  const std::uint64_t a = detail::mix64(parent.value ^ detail::hash_label(label));
  return Seed{detail::mix64(a + (index + 1) * detail::kGolden)};
}

/// Counter-based generator: the n-th output is mix64(key + n * golden), i.e.
/// SplitMix64 addressed by (key, counter). The full state is the pair, so a
/// stream can be checkpointed and resumed exactly.
class CounterRng {
 public:
  constexpr explicit CounterRng(Seed seed, std::uint64_t counter = 0)
      : key_(seed.value), counter_(counter) {}

  constexpr std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Fisher-Yates shuffle driven by a CounterRng; std::shuffle is not portable.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, CounterRng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(rng.below(static_cast<std::uint64_t>(i) + 1));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace asyncfl
