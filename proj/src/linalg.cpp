#include "mmseq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"

namespace mmseq {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec affine(const Matrix& w, const Vec& x, const Vec& b) {
  if (w.cols != x.size()) {
    throw ShapeError("affine: W is " + std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                     " but x has length " + std::to_string(x.size()));
  }
  if (w.rows != b.size()) {
    throw ShapeError("affine: W is " + std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                     " but b has length " + std::to_string(b.size()));
  }
  Vec y = b;
  kernels::matvec_acc(w, x.data(), y.data());
  return y;
}

Vec matvec(const Matrix& w, const Vec& x) {
  if (w.cols != x.size()) {
    throw ShapeError("matvec: W is " + std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                     " but x has length " + std::to_string(x.size()));
  }
  Vec y(w.rows, 0.0);
  kernels::matvec_acc(w, x.data(), y.data());
  return y;
}

Vec activate(const Vec& v, Activation kind) {
  Vec out(v.size());
  if (kind == Activation::sigmoid) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  }
  return out;
}

Vec softmax(const Vec& v) {
  if (v.empty()) {
    throw ShapeError("softmax: empty vector");
  }
  const double m = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& e : out) e /= sum;
  return out;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Matrix reverse_rows(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::copy(m.row(m.rows - 1 - i), m.row(m.rows - 1 - i) + m.cols, out.row(i));
  }
  return out;
}

Vec column_means(const Matrix& m) {
  Vec out(m.cols, 0.0);
  if (m.rows == 0) return out;
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += r[j];
  }
  for (double& v : out) v /= static_cast<double>(m.rows);
  return out;
}

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const Matrix& m) { return all_finite(m.data); }

}  // namespace mmseq
