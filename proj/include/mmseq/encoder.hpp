#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmseq/cells.hpp"
#include "mmseq/linalg.hpp"
#include "mmseq/params.hpp"

namespace mmseq {

enum class Direction { forward, backward };

struct EncoderConfig {
  CellKind cell = CellKind::gru;
  std::size_t hidden_dim = 16;
  std::size_t num_layers = 2;
  bool bidirectional = true;
};

// Cell parameters for one traversal direction of one layer.
struct DirectionParams {
  CellKind cell = CellKind::gru;
  LstmParams lstm;
  GruParams gru;
};

struct EncoderParams {
  EncoderConfig cfg;
  std::size_t input_dim = 0;
  struct Layer {
    DirectionParams fwd;
    DirectionParams bwd;  // unused when not bidirectional
  };
  std::vector<Layer> layers;

  std::size_t output_dim() const {
    return cfg.bidirectional ? 2 * cfg.hidden_dim : cfg.hidden_dim;
  }
};

EncoderParams add_encoder_params(ParameterStore& store, const EncoderConfig& cfg,
                                 std::size_t input_dim, const std::string& prefix);
void init_encoder_params(ParameterStore& store, const EncoderParams& p, const InitScheme& scheme,
                         SeedStream& seeds);

// Tapes for one direction pass; steps are stored in processing order.
struct DirectionTape {
  Direction dir = Direction::forward;
  std::vector<LstmStepTape> lstm_steps;
  std::vector<GruStepTape> gru_steps;
};

struct EncoderTape {
  struct LayerTape {
    Matrix input;
    DirectionTape fwd;
    DirectionTape bwd;
  };
  std::vector<LayerTape> layers;
};

// Unrolls one cell over the rows of `input` in the given traversal order,
// starting from all-zero hidden (and cell) state. Row t of the result holds
// the hidden state after consuming frame t; backward-direction rows are
// re-aligned to original frame order.
Matrix run_direction(const ParameterStore& store, const DirectionParams& p, const Matrix& input,
                     Direction dir, DirectionTape* tape = nullptr);

// BPTT through one direction pass. `grad_out` is aligned to original frame
// order; returns the gradient with respect to the input rows.
Matrix run_direction_backward(const ParameterStore& store, const DirectionParams& p,
                              const DirectionTape& tape, const Matrix& grad_out,
                              Gradients& grads);

// Stacked (bi)directional encoding: layer 1 consumes the frames, each later
// layer consumes the previous layer's concatenated output rows. Result is
// the top layer's T x output_dim matrix.
Matrix encode(const ParameterStore& store, const EncoderParams& p, const Matrix& frames,
              EncoderTape* tape = nullptr);

Matrix encode_backward(const ParameterStore& store, const EncoderParams& p,
                       const EncoderTape& tape, const Matrix& grad_out, Gradients& grads);

}  // namespace mmseq
