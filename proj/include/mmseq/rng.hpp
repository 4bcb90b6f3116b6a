#pragma once

#include <cmath>
#include <cstdint>

#include "mmseq/linalg.hpp"

namespace mmseq {

// splitmix64: the single generator behind every stochastic operation.
// Deterministic for a fixed seed, independent of platform and libc.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]; never zero so log() is safe.
  double next_unit() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Hands out derived seeds in a fixed order during model assembly.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master) : rng_(master) {}
  std::uint64_t next() { return rng_.next(); }

 private:
  SplitMix64 rng_;
};

struct InitScheme {
  enum class Kind { normal, glorot_normal };
  Kind kind = Kind::normal;
  double mean = 0.0;
  double stddev = 0.01;

  static InitScheme normal(double mean, double stddev);
  static InitScheme glorot();
};

// Seeded matrix draw. Glorot-normal uses stddev = sqrt(2 / (rows + cols)).
Matrix init_matrix(std::size_t rows, std::size_t cols, const InitScheme& scheme,
                   std::uint64_t seed);

}  // namespace mmseq
