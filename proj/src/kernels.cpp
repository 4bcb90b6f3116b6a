#include "mmseq/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mmseq::kernels {

namespace {
std::atomic<int> g_threads{1};

// Parallelize only when the row count and total work both clear the
// thresholds; small kernels lose more to fork/join than they gain.
bool go_parallel(std::size_t n, std::size_t work) {
  return g_threads.load() > 1 && n >= kParallelMinRows && work >= kParallelMinWork;
}
}  // namespace

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int threads() { return g_threads.load(); }

void matvec_acc_serial(const Matrix& w, const double* x, double* y) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* wr = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += wr[j] * x[j];
    y[i] += acc;
  }
}

void matvec_acc(const Matrix& w, const double* x, double* y) {
#ifdef _OPENMP
  if (go_parallel(w.rows, w.rows * w.cols)) {
    const std::int64_t rows = static_cast<std::int64_t>(w.rows);
#pragma omp parallel for schedule(static) num_threads(g_threads.load())
    for (std::int64_t i = 0; i < rows; ++i) {
      const double* wr = w.row(static_cast<std::size_t>(i));
      double acc = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) acc += wr[j] * x[j];
      y[i] += acc;
    }
    return;
  }
#endif
  matvec_acc_serial(w, x, y);
}

void matvec_t_acc_serial(const Matrix& w, const double* d, double* out) {
  for (std::size_t j = 0; j < w.cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) acc += w(i, j) * d[i];
    out[j] += acc;
  }
}

void matvec_t_acc(const Matrix& w, const double* d, double* out) {
#ifdef _OPENMP
  if (go_parallel(w.cols, w.rows * w.cols)) {
    const std::int64_t cols = static_cast<std::int64_t>(w.cols);
#pragma omp parallel for schedule(static) num_threads(g_threads.load())
    for (std::int64_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w.rows; ++i) acc += w(i, static_cast<std::size_t>(j)) * d[i];
      out[j] += acc;
    }
    return;
  }
#endif
  matvec_t_acc_serial(w, d, out);
}

void outer_acc_serial(Matrix& dw, const double* d, const double* x) {
  for (std::size_t i = 0; i < dw.rows; ++i) {
    double* r = dw.row(i);
    const double di = d[i];
    for (std::size_t j = 0; j < dw.cols; ++j) r[j] += di * x[j];
  }
}

void outer_acc(Matrix& dw, const double* d, const double* x) {
#ifdef _OPENMP
  if (go_parallel(dw.rows, dw.rows * dw.cols)) {
    const std::int64_t rows = static_cast<std::int64_t>(dw.rows);
#pragma omp parallel for schedule(static) num_threads(g_threads.load())
    for (std::int64_t i = 0; i < rows; ++i) {
      double* r = dw.row(static_cast<std::size_t>(i));
      const double di = d[i];
      for (std::size_t j = 0; j < dw.cols; ++j) r[j] += di * x[j];
    }
    return;
  }
#endif
  outer_acc_serial(dw, d, x);
}

}  // namespace mmseq::kernels
