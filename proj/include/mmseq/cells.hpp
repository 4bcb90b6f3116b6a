#pragma once

#include <cstddef>
#include <string>

#include "mmseq/linalg.hpp"
#include "mmseq/params.hpp"
#include "mmseq/rng.hpp"

namespace mmseq {

enum class CellKind { lstm, gru };

// Peephole LSTM. The peephole weights (w_ci, w_cf, w_co) are full square
// matrices applied to the cell state, and the forget gate has its own
// recurrent weight w_hf.
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  ParamId w_xi, w_hi, w_ci, b_i;
  ParamId w_xf, w_hf, w_cf, b_f;
  ParamId w_xc, w_hc, b_c;
  ParamId w_xo, w_ho, w_co, b_o;
};

// GRU over the concatenated [h_prev, x] input; no bias terms. The optional
// readout projection is not part of the classification path.
struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  ParamId w_reset, w_update, w_cand;
  ParamId w_readout;  // valid only when has_readout
  bool has_readout = false;
};

LstmParams add_lstm_params(ParameterStore& store, const std::string& prefix,
                           std::size_t input_dim, std::size_t hidden_dim);
GruParams add_gru_params(ParameterStore& store, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden_dim,
                         bool with_readout = false);

// Weight matrices drawn from `scheme`, biases left at zero.
void init_lstm_params(ParameterStore& store, const LstmParams& p, const InitScheme& scheme,
                      SeedStream& seeds);
void init_gru_params(ParameterStore& store, const GruParams& p, const InitScheme& scheme,
                     SeedStream& seeds);

// Cached values from one forward step, enough for an exact backward pass.
// Re-running the step from (x, h_prev, c_prev) reproduces the outputs
// bit-exactly.
struct LstmStepTape {
  Vec x, h_prev, c_prev;
  Vec gate_i, gate_f, cand, gate_o;
  Vec c, tanh_c;
};

struct GruStepTape {
  Vec x, h_prev;
  Vec joint;       // [h_prev, x]
  Vec gate_r, gate_z;
  Vec joint_cand;  // [r * h_prev, x]
  Vec cand;
};

struct LstmStepResult {
  Vec h, c;
};

LstmStepResult lstm_step(const ParameterStore& store, const LstmParams& p, const Vec& x,
                         const Vec& h_prev, const Vec& c_prev, LstmStepTape* tape = nullptr);

Vec gru_step(const ParameterStore& store, const GruParams& p, const Vec& x, const Vec& h_prev,
             GruStepTape* tape = nullptr);

// y = sigmoid(W_o h)
Vec gru_readout(const Matrix& w_o, const Vec& h);

struct LstmStepGrad {
  Vec dx, dh_prev, dc_prev;
};

struct GruStepGrad {
  Vec dx, dh_prev;
};

// Exact gradients of one step. Parameter gradients accumulate additively
// into `grads`; callers zero the buffers once per batch.
LstmStepGrad lstm_backward(const ParameterStore& store, const LstmParams& p,
                           const LstmStepTape& tape, const Vec& dh, const Vec& dc,
                           Gradients& grads);

GruStepGrad gru_backward(const ParameterStore& store, const GruParams& p, const GruStepTape& tape,
                         const Vec& dh, Gradients& grads);

}  // namespace mmseq
