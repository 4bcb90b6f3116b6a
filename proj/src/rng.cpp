#include "mmseq/rng.hpp"

#include <cmath>
#include <string>

#include "mmseq/error.hpp"

namespace mmseq {

InitScheme InitScheme::normal(double mean, double stddev) {
  if (!(stddev > 0.0)) {
    throw ConfigError("InitScheme: stddev must be > 0");
  }
  InitScheme s;
  s.kind = Kind::normal;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

InitScheme InitScheme::glorot() {
  InitScheme s;
  s.kind = Kind::glorot_normal;
  return s;
}

Matrix init_matrix(std::size_t rows, std::size_t cols, const InitScheme& scheme,
                   std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("init_matrix: dimensions must be positive, got " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  double mean = scheme.mean;
  double stddev = scheme.stddev;
  if (scheme.kind == InitScheme::Kind::glorot_normal) {
    mean = 0.0;
    stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
  }
  SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data) v = mean + stddev * rng.next_gaussian();
  return m;
}

}  // namespace mmseq
