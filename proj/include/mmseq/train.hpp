#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmseq/adam.hpp"
#include "mmseq/model.hpp"

namespace mmseq {

// Batch-mean total loss (BCE + lambda * alignment), forward only.
double batch_loss(const Model& m, std::span<const FrameExample> batch, int threads = 1);

// Gradients of the batch-mean total loss, accumulated into model.grads
// (caller zeroes them per batch). Each item's contribution is computed in
// its own buffer and reduced in item order, so any thread count produces
// the same bits as the serial reference. Returns the batch-mean loss.
double compute_gradients(Model& m, std::span<const FrameExample> batch, int threads = 1);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  AdamHyper adam;
  LrSchedule schedule;
  bool use_schedule = true;  // otherwise a constant adam.alpha
  int threads = 1;
  std::size_t eval_k = 20;
  std::string checkpoint_path;  // saved after each epoch when non-empty
  bool verbose = false;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double val_gap = -1.0;  // -1 when no validation set was given
  std::uint64_t steps_done = 0;
  double lr_last = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
};

// Seeded shuffling, minibatch Adam steps, per-epoch mean loss and
// validation GAP. Identical (seed, data, config) runs produce identical
// logs; single-thread mode is the bit-deterministic reference.
TrainLog train(Model& m, AdamState& state, const std::vector<FrameExample>& train_set,
               const std::vector<FrameExample>& val_set, const TrainOptions& opts);

struct FdOptions {
  double step = 1e-6;
  std::size_t max_coords_per_group = 120;
  std::uint64_t seed = 0x9d5f;
  int threads = 1;
};

struct FdGroupReport {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
};

struct FdReport {
  std::vector<FdGroupReport> groups;
  double max_rel_err = 0.0;
};

// Central-difference audit of analytic gradients on a sampled coordinate
// subset of every parameter group.
FdReport finite_diff_check(Model& m, const std::vector<FrameExample>& batch,
                           const FdOptions& opts = {});

// Same audit against caller-provided gradients; lets tests corrupt the
// analytic side to confirm the harness flags it.
FdReport finite_diff_compare(Model& m, const std::vector<FrameExample>& batch,
                             const Gradients& analytic, const FdOptions& opts = {});

// Core of the harness over an arbitrary objective of the stored parameters.
FdReport finite_diff_audit(ParameterStore& params, const std::function<double()>& loss,
                           const Gradients& analytic, const FdOptions& opts = {});

}  // namespace mmseq
