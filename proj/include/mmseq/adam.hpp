#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmseq/params.hpp"

namespace mmseq {

struct AdamHyper {
  double alpha = 0.001;   // stepsize
  double mu = 0.9;        // first-moment decay
  double v = 0.999;       // second-moment decay
  double epsilon = 1e-8;
};

// Per-parameter first/second moment buffers and the shared step counter.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> n;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const ParameterStore& store);
};

// One update: t += 1; m = mu m + (1-mu) g; n = v n + (1-v) g^2;
// theta -= lr * (m / (1-mu^t)) / (sqrt(n / (1-v^t)) + eps), elementwise.
void adam_step(ParameterStore& params, const Gradients& grads, AdamState& state,
               const AdamHyper& h, double lr);

// Stepwise-exponential decay: the decay interval is `decay_steps` before
// `switch_step` and `late_decay_steps` after it.
struct LrSchedule {
  double base_lr = 0.01;
  double decay_factor = 0.95;
  std::uint64_t decay_steps = 1000;
  std::uint64_t late_decay_steps = 100;
  std::uint64_t switch_step = std::numeric_limits<std::uint64_t>::max();
};

double lr_at_step(std::uint64_t step, const LrSchedule& s);

}  // namespace mmseq
