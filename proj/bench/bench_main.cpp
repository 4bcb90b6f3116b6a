// Benchmark comparing the serial reference kernels against the OpenMP
// versions, and single- vs multi-thread batch gradient computation. Also
// verifies that every parallel result is bit-identical to the serial one.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "mmseq/kernels.hpp"
#include "mmseq/rng.hpp"
#include "mmseq/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mmseq;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.next_gaussian();
  return m;
}

void bench_matvec(std::size_t rows, std::size_t cols, int reps, int threads) {
  SplitMix64 rng(1);
  const Matrix w = random_matrix(rows, cols, rng);
  Vec x(cols);
  for (double& v : x) v = rng.next_gaussian();

  Vec y_serial(rows, 0.0), y_parallel(rows, 0.0);

  kernels::set_threads(1);
  double t0 = now_ms();
  for (int r = 0; r < reps; ++r) kernels::matvec_acc_serial(w, x.data(), y_serial.data());
  const double serial_ms = now_ms() - t0;

  kernels::set_threads(threads);
  t0 = now_ms();
  for (int r = 0; r < reps; ++r) kernels::matvec_acc(w, x.data(), y_parallel.data());
  const double parallel_ms = now_ms() - t0;
  kernels::set_threads(1);

  const bool identical = y_serial == y_parallel;
  std::printf("matvec %5zux%-5zu  serial %8.2f ms  omp(%d) %8.2f ms  speedup %.2fx  %s\n",
              rows, cols, serial_ms, threads, parallel_ms, serial_ms / parallel_ms,
              identical ? "bit-identical" : "MISMATCH");
}

void bench_batch_gradients(int threads) {
  DatasetSpec spec;
  spec.num_videos = 40;
  spec.num_classes = 12;
  spec.frames = 40;
  spec.visual_dim = 64;
  spec.audio_dim = 16;
  spec.seed = 7;
  const SyntheticDataset data = generate_synthetic(spec);
  std::vector<FrameExample> batch(data.train.begin(), data.train.begin() + 32);

  ModelConfig cfg;
  cfg.cell = CellKind::gru;
  cfg.bidirectional = true;
  cfg.num_layers = 2;
  cfg.hidden_dim = 64;
  cfg.attention = true;
  cfg.num_classes = spec.num_classes;
  cfg.visual_dim = spec.visual_dim;
  cfg.audio_dim = spec.audio_dim;

  Model serial_model = build_model(cfg, 99);
  Model parallel_model = build_model(cfg, 99);

  kernels::set_threads(1);
  serial_model.grads.zero();
  double t0 = now_ms();
  compute_gradients(serial_model, batch, 1);
  const double serial_ms = now_ms() - t0;

  kernels::set_threads(threads);
  parallel_model.grads.zero();
  t0 = now_ms();
  compute_gradients(parallel_model, batch, threads);
  const double parallel_ms = now_ms() - t0;
  kernels::set_threads(1);

  bool identical = true;
  for (std::size_t i = 0; i < serial_model.grads.count(); ++i) {
    identical = identical && serial_model.grads.at_index(i).data ==
                                 parallel_model.grads.at_index(i).data;
  }
  std::printf(
      "batch gradients (bi-GRU H=64, T=40, batch 32)  serial %8.2f ms  omp(%d) %8.2f ms  "
      "speedup %.2fx  %s\n",
      serial_ms, threads, parallel_ms, serial_ms / parallel_ms,
      identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 2;
#ifdef _OPENMP
  threads = omp_get_num_procs();
#endif
  if (argc > 1) threads = std::stoi(argv[1]);
  std::printf("worker threads: %d\n", threads);

  bench_matvec(256, 256, 20000, threads);
  bench_matvec(1024, 1024, 2000, threads);
  bench_matvec(4096, 1024, 500, threads);
  bench_batch_gradients(threads);
  return 0;
}
