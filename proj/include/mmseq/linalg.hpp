#pragma once

#include <cstddef>
#include <vector>

namespace mmseq {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix& o) const = default;
};

enum class Activation { sigmoid, tanh };

// Numerically stable logistic function.
double sigmoid(double x);

// w * x + b
Vec affine(const Matrix& w, const Vec& x, const Vec& b);
// w * x
Vec matvec(const Matrix& w, const Vec& x);
// Elementwise sigmoid or tanh.
Vec activate(const Vec& v, Activation kind);
// Shift-stable softmax: subtracts the max before exponentiation.
Vec softmax(const Vec& v);

Vec concat(const Vec& a, const Vec& b);
Matrix reverse_rows(const Matrix& m);
Vec column_means(const Matrix& m);
bool all_finite(const Vec& v);
bool all_finite(const Matrix& m);

}  // namespace mmseq
