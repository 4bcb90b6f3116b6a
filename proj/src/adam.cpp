#include "mmseq/adam.hpp"

#include <cmath>

#include "mmseq/error.hpp"

namespace mmseq {

AdamState::AdamState(const ParameterStore& store) {
  m.reserve(store.count());
  n.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    const Matrix& v = store.value_at(i);
    m.emplace_back(v.rows, v.cols);
    n.emplace_back(v.rows, v.cols);
  }
}

void adam_step(ParameterStore& params, const Gradients& grads, AdamState& state,
               const AdamHyper& h, double lr) {
  if (state.m.size() != params.count() || grads.count() != params.count()) {
    throw ConfigError("adam_step: state and gradient buffers do not match the parameters");
  }
  state.t += 1;
  const double mu_corr = 1.0 - std::pow(h.mu, static_cast<double>(state.t));
  const double v_corr = 1.0 - std::pow(h.v, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.count(); ++i) {
    Matrix& theta = params.value_at(i);
    Matrix& m = state.m[i];
    Matrix& n = state.n[i];
    const Matrix& g = grads.at_index(i);
    if (!theta.same_shape(g)) {
      throw ConfigError("adam_step: gradient shape mismatch for parameter index " +
                        std::to_string(i));
    }
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double gk = g.data[k];
      m.data[k] = h.mu * m.data[k] + (1.0 - h.mu) * gk;
      n.data[k] = h.v * n.data[k] + (1.0 - h.v) * gk * gk;
      const double m_hat = m.data[k] / mu_corr;
      const double n_hat = n.data[k] / v_corr;
      theta.data[k] -= lr * m_hat / (std::sqrt(n_hat) + h.epsilon);
    }
  }
}

double lr_at_step(std::uint64_t step, const LrSchedule& s) {
  const std::uint64_t early = step < s.switch_step ? step : s.switch_step;
  std::uint64_t intervals = s.decay_steps ? early / s.decay_steps : 0;
  if (step > s.switch_step && s.late_decay_steps) {
    intervals += (step - s.switch_step) / s.late_decay_steps;
  }
  return s.base_lr * std::pow(s.decay_factor, static_cast<double>(intervals));
}

}  // namespace mmseq
