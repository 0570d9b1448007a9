#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trajprune {

// SplitMix64 (Steele, Lea, Flood 2014). Used to expand a 64-bit seed into
// xoshiro state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next();

 private:
  std::uint64_t state_;
};

// xoshiro256** 1.0 (Blackman, Vigna). Every sampling routine below is
// written out explicitly instead of going through <random> distributions,
// whose output is implementation-defined; this keeps seeded runs identical
// across standard libraries.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);
  explicit Xoshiro256(const std::array<std::uint64_t, 4>& state)
      : s_(state) {}

  std::uint64_t Next();
  std::uint64_t operator()() { return Next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  // Uniform integer in [0, bound), bound > 0 (Lemire's method).
  std::uint64_t Below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal via Box-Muller; the spare variate is cached.
  double Gaussian();

 private:
  std::array<std::uint64_t, 4> s_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fisher-Yates shuffle of the index range [0, n).
std::vector<std::size_t> SeededPermutation(std::size_t n, std::uint64_t seed);

}  // namespace trajprune
