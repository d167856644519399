#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

#include "distcomp/error.hpp"

namespace distcomp {

// Seed splitting.
//
// Every random stream in the library is keyed by (master seed, label, index):
//   derive_seed(m, label, i) = splitmix64(splitmix64(m ^ fnv1a64(label)) + i)
// Labels are "<module>/<purpose>", e.g. "covering/nu" or "alternate/restart".
// The scheme only uses fully specified integer arithmetic, so streams are
// identical on every platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a64(label)) + index);
}

// Thin wrapper over mt19937_64. The distribution helpers are written out by
// hand because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound) {
    require(bound > 0, "uniform_index: empty range");
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Index drawn from nonnegative weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    require(total > 0.0, "categorical: zero total weight");
    double u = uniform_real() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Dirichlet(1, ..., 1) sample via normalized exponentials.
  template <typename Container>
  void fill_simplex(Container& out) {
    double total = 0.0;
    for (auto& v : out) {
      double u = uniform_real();
      v = -std::log1p(-u);
      total += v;
    }
    for (auto& v : out) v /= total;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace distcomp
