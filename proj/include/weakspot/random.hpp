#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace weakspot::random {

// SplitMix64 finaliser.
constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Counter-based stream: every draw is a pure function of (key, counter), so
/// results never depend on the order in which draws are made.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) : key_(key) {}

  // Uniform in (0, 1].
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = combine(key_, counter) >> 11;
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on counters 2n and 2n+1.
  double normal(std::uint64_t n) const {
    const double u1 = uniform(2 * n);
    const double u2 = uniform(2 * n + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace weakspot::random
