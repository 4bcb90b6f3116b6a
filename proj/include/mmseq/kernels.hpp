#pragma once

#include "mmseq/linalg.hpp"

// Inner-loop kernels. Each has a serial reference implementation and an
// OpenMP row-parallel version. The parallel versions assign every output
// coordinate to exactly one thread running the same inner loop as the
// reference, so both paths produce bit-identical results.
namespace mmseq::kernels {

// Worker count used by the parallel kernels. 1 = serial everywhere.
void set_threads(int n);
int threads();

// Kernels stay serial below these row/work thresholds regardless of the
// thread setting.
inline constexpr std::size_t kParallelMinRows = 64;
inline constexpr std::size_t kParallelMinWork = 1u << 18;

// y += W x
void matvec_acc_serial(const Matrix& w, const double* x, double* y);
void matvec_acc(const Matrix& w, const double* x, double* y);

// out += W^T d
void matvec_t_acc_serial(const Matrix& w, const double* d, double* out);
void matvec_t_acc(const Matrix& w, const double* d, double* out);

// dw += d x^T
void outer_acc_serial(Matrix& dw, const double* d, const double* x);
void outer_acc(Matrix& dw, const double* d, const double* x);

}  // namespace mmseq::kernels
