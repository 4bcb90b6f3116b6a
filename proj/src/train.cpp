#include "mmseq/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>

#include "mmseq/checkpoint.hpp"
#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"
#include "mmseq/metrics.hpp"
#include "mmseq/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mmseq {

namespace {

// Runs fn(i) for every item; parallel when threads > 1. Exceptions are
// captured per item and the first one rethrown after the join.
template <typename Fn>
void for_each_item(std::size_t n, int threads, Fn&& fn) {
#ifdef _OPENMP
  if (threads > 1 && n > 1) {
    std::vector<std::exception_ptr> errors(n);
    const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace

double batch_loss(const Model& m, std::span<const FrameExample> batch, int threads) {
  if (batch.empty()) {
    throw DataError("batch_loss: empty batch");
  }
  std::vector<double> losses(batch.size());
  for_each_item(batch.size(), threads,
                [&](std::size_t i) { losses[i] = forward_item(m, batch[i], false).total; });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(batch.size());
}

double compute_gradients(Model& m, std::span<const FrameExample> batch, int threads) {
  if (batch.empty()) {
    throw DataError("compute_gradients: empty batch");
  }
  const double upstream = 1.0 / static_cast<double>(batch.size());
  std::vector<double> losses(batch.size());

  if (threads > 1 && batch.size() > 1) {
    // buffers allocated outside the parallel region; the loop only computes
    std::vector<Gradients> buffers(batch.size());
    for (Gradients& b : buffers) b.reshape(m.params);
    for_each_item(batch.size(), threads, [&](std::size_t i) {
      ItemForward f = forward_item(m, batch[i], true);
      backward_item(m, f, batch[i], upstream, buffers[i]);
      losses[i] = f.total;
    });
    for (const Gradients& b : buffers) m.grads.add(b);
  } else {
    Gradients scratch(m.params);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      scratch.zero();
      ItemForward f = forward_item(m, batch[i], true);
      backward_item(m, f, batch[i], upstream, scratch);
      losses[i] = f.total;
      m.grads.add(scratch);
    }
  }

  double sum = 0.0;
  for (double l : losses) sum += l;
  const double mean_loss = sum / static_cast<double>(batch.size());
  if (!std::isfinite(mean_loss)) {
    throw NumericError("compute_gradients: non-finite batch loss");
  }
  const std::size_t bad = m.grads.first_non_finite();
  if (bad < m.params.count()) {
    throw NumericError("compute_gradients: non-finite gradient in '" + m.params.name_at(bad) +
                       "'");
  }
  return mean_loss;
}

TrainLog train(Model& m, AdamState& state, const std::vector<FrameExample>& train_set,
               const std::vector<FrameExample>& val_set, const TrainOptions& opts) {
  if (train_set.empty()) {
    throw DataError("train: empty training set");
  }
  if (opts.batch_size < 1) {
    throw ConfigError("train: batch_size must be >= 1");
  }
  for (const FrameExample& ex : train_set) {
    if (ex.labels.empty()) {
      throw DataError("train: training example '" + ex.video_id + "' has no labels");
    }
  }
  bool warned_truncation = false;
  for (const FrameExample& ex : train_set) {
    if (ex.visual.rows > m.cfg.max_frames && !warned_truncation) {
      std::fprintf(stderr,
                   "warning: sequences longer than max_frames=%zu are truncated (first: '%s')\n",
                   m.cfg.max_frames, ex.video_id.c_str());
      warned_truncation = true;
    }
  }

  kernels::set_threads(opts.threads);
  TrainLog log;
  SplitMix64 shuffle_rng(opts.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  GroundTruth val_truth;
  if (!val_set.empty()) val_truth = ground_truth_of(val_set);

  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    double lr = opts.use_schedule ? lr_at_step(state.t, opts.schedule) : opts.adam.alpha;
    std::vector<FrameExample> batch;
    batch.reserve(opts.batch_size);
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + opts.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);

      m.grads.zero();
      double loss = 0.0;
      try {
        loss = compute_gradients(m, batch, opts.threads);
      } catch (const NumericError& e) {
        const std::string ckpt = opts.checkpoint_path.empty()
                                     ? "none saved"
                                     : "last good checkpoint: " + opts.checkpoint_path;
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + "; " +
                           ckpt + ")");
      }
      lr = opts.use_schedule ? lr_at_step(state.t, opts.schedule) : opts.adam.alpha;
      adam_step(m.params, m.grads, state, opts.adam, lr);
      loss_sum += loss;
      ++n_batches;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(n_batches);
    entry.steps_done = state.t;
    entry.lr_last = lr;
    if (!val_set.empty()) {
      entry.val_gap = gap_at_k(predict_all(m, val_set), val_truth, opts.eval_k).gap;
    }
    log.epochs.push_back(entry);

    if (opts.verbose) {
      std::printf("epoch %zu  loss %.17g  val_gap %.17g  lr %.6g  steps %llu\n", entry.epoch,
                  entry.mean_loss, entry.val_gap, entry.lr_last,
                  static_cast<unsigned long long>(entry.steps_done));
      std::fflush(stdout);
    }
    if (!opts.checkpoint_path.empty()) {
      save_checkpoint(opts.checkpoint_path, m, state, state.t);
    }
  }
  return log;
}

namespace {

double rel_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-8) return 0.0;
  return diff / std::max(std::abs(numeric), 1e-8);
}

}  // namespace

FdReport finite_diff_audit(ParameterStore& params, const std::function<double()>& loss,
                           const Gradients& analytic, const FdOptions& opts) {
  FdReport report;
  SplitMix64 pick(opts.seed);
  for (std::size_t g = 0; g < params.count(); ++g) {
    Matrix& theta = params.value_at(g);
    const std::size_t total = theta.data.size();
    std::vector<std::size_t> coords;
    if (total <= opts.max_coords_per_group) {
      coords.resize(total);
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      // sample without replacement
      std::vector<std::size_t> all(total);
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t i = 0; i < opts.max_coords_per_group; ++i) {
        const std::size_t j = i + pick.next_below(total - i);
        std::swap(all[i], all[j]);
      }
      coords.assign(all.begin(),
                    all.begin() + static_cast<std::ptrdiff_t>(opts.max_coords_per_group));
    }

    FdGroupReport group;
    group.name = params.name_at(g);
    group.coords_checked = coords.size();
    for (std::size_t k : coords) {
      const double saved = theta.data[k];
      theta.data[k] = saved + opts.step;
      const double plus = loss();
      theta.data[k] = saved - opts.step;
      const double minus = loss();
      theta.data[k] = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double err = rel_error(analytic.at_index(g).data[k], numeric);
      group.max_rel_err = std::max(group.max_rel_err, err);
    }
    report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
    report.groups.push_back(std::move(group));
  }
  return report;
}

FdReport finite_diff_compare(Model& m, const std::vector<FrameExample>& batch,
                             const Gradients& analytic, const FdOptions& opts) {
  return finite_diff_audit(
      m.params, [&]() { return batch_loss(m, batch, opts.threads); }, analytic, opts);
}

FdReport finite_diff_check(Model& m, const std::vector<FrameExample>& batch,
                           const FdOptions& opts) {
  m.grads.zero();
  compute_gradients(m, batch, opts.threads);
  const Gradients analytic = m.grads;
  return finite_diff_compare(m, batch, analytic, opts);
}

}  // namespace mmseq
