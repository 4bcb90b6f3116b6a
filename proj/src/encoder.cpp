#include "mmseq/encoder.hpp"

#include <algorithm>
#include <string>

#include "mmseq/error.hpp"

namespace mmseq {

namespace {

DirectionParams add_direction(ParameterStore& store, CellKind cell, const std::string& prefix,
                              std::size_t input_dim, std::size_t hidden_dim) {
  DirectionParams p;
  p.cell = cell;
  if (cell == CellKind::lstm) {
    p.lstm = add_lstm_params(store, prefix, input_dim, hidden_dim);
  } else {
    p.gru = add_gru_params(store, prefix, input_dim, hidden_dim);
  }
  return p;
}

std::size_t direction_input_dim(const DirectionParams& p) {
  return p.cell == CellKind::lstm ? p.lstm.input_dim : p.gru.input_dim;
}

std::size_t direction_hidden_dim(const DirectionParams& p) {
  return p.cell == CellKind::lstm ? p.lstm.hidden_dim : p.gru.hidden_dim;
}

}  // namespace

EncoderParams add_encoder_params(ParameterStore& store, const EncoderConfig& cfg,
                                 std::size_t input_dim, const std::string& prefix) {
  if (cfg.num_layers < 1 || cfg.hidden_dim < 1) {
    throw ConfigError("encoder: num_layers and hidden_dim must be >= 1");
  }
  EncoderParams p;
  p.cfg = cfg;
  p.input_dim = input_dim;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    EncoderParams::Layer layer;
    const std::string base = prefix + ".l" + std::to_string(l);
    layer.fwd = add_direction(store, cfg.cell, base + ".fwd", in, cfg.hidden_dim);
    if (cfg.bidirectional) {
      layer.bwd = add_direction(store, cfg.cell, base + ".bwd", in, cfg.hidden_dim);
    }
    p.layers.push_back(std::move(layer));
    in = cfg.bidirectional ? 2 * cfg.hidden_dim : cfg.hidden_dim;
  }
  return p;
}

void init_encoder_params(ParameterStore& store, const EncoderParams& p, const InitScheme& scheme,
                         SeedStream& seeds) {
  for (const auto& layer : p.layers) {
    if (layer.fwd.cell == CellKind::lstm) {
      init_lstm_params(store, layer.fwd.lstm, scheme, seeds);
    } else {
      init_gru_params(store, layer.fwd.gru, scheme, seeds);
    }
    if (p.cfg.bidirectional) {
      if (layer.bwd.cell == CellKind::lstm) {
        init_lstm_params(store, layer.bwd.lstm, scheme, seeds);
      } else {
        init_gru_params(store, layer.bwd.gru, scheme, seeds);
      }
    }
  }
}

Matrix run_direction(const ParameterStore& store, const DirectionParams& p, const Matrix& input,
                     Direction dir, DirectionTape* tape) {
  if (input.rows == 0) {
    throw DataError("run_direction: empty sequence");
  }
  if (input.cols != direction_input_dim(p)) {
    throw ShapeError("run_direction: input has " + std::to_string(input.cols) +
                     " columns, cell expects " + std::to_string(direction_input_dim(p)));
  }
  const std::size_t t_len = input.rows;
  const std::size_t h_dim = direction_hidden_dim(p);
  Matrix out(t_len, h_dim);

  if (tape) {
    tape->dir = dir;
    tape->lstm_steps.clear();
    tape->gru_steps.clear();
    if (p.cell == CellKind::lstm) {
      tape->lstm_steps.resize(t_len);
    } else {
      tape->gru_steps.resize(t_len);
    }
  }

  Vec h(h_dim, 0.0), c(h_dim, 0.0);
  for (std::size_t step = 0; step < t_len; ++step) {
    const std::size_t row = dir == Direction::forward ? step : t_len - 1 - step;
    Vec x(input.row(row), input.row(row) + input.cols);
    if (p.cell == CellKind::lstm) {
      LstmStepResult r =
          lstm_step(store, p.lstm, x, h, c, tape ? &tape->lstm_steps[step] : nullptr);
      h = std::move(r.h);
      c = std::move(r.c);
    } else {
      h = gru_step(store, p.gru, x, h, tape ? &tape->gru_steps[step] : nullptr);
    }
    std::copy(h.begin(), h.end(), out.row(row));
  }
  return out;
}

Matrix run_direction_backward(const ParameterStore& store, const DirectionParams& p,
                              const DirectionTape& tape, const Matrix& grad_out,
                              Gradients& grads) {
  const std::size_t t_len =
      p.cell == CellKind::lstm ? tape.lstm_steps.size() : tape.gru_steps.size();
  if (t_len == 0) {
    throw ConfigError("run_direction_backward: tape is empty");
  }
  if (grad_out.rows != t_len || grad_out.cols != direction_hidden_dim(p)) {
    throw ShapeError("run_direction_backward: grad_out is " + std::to_string(grad_out.rows) +
                     "x" + std::to_string(grad_out.cols) + ", expected " + std::to_string(t_len) +
                     "x" + std::to_string(direction_hidden_dim(p)));
  }
  const std::size_t h_dim = direction_hidden_dim(p);
  const std::size_t in_dim = direction_input_dim(p);
  Matrix grad_in(t_len, in_dim);

  Vec dh_carry(h_dim, 0.0), dc_carry(h_dim, 0.0);
  for (std::size_t k = t_len; k-- > 0;) {
    const std::size_t row = tape.dir == Direction::forward ? k : t_len - 1 - k;
    Vec dh(grad_out.row(row), grad_out.row(row) + h_dim);
    for (std::size_t j = 0; j < h_dim; ++j) dh[j] += dh_carry[j];
    if (p.cell == CellKind::lstm) {
      LstmStepGrad g = lstm_backward(store, p.lstm, tape.lstm_steps[k], dh, dc_carry, grads);
      dh_carry = std::move(g.dh_prev);
      dc_carry = std::move(g.dc_prev);
      std::copy(g.dx.begin(), g.dx.end(), grad_in.row(row));
    } else {
      GruStepGrad g = gru_backward(store, p.gru, tape.gru_steps[k], dh, grads);
      dh_carry = std::move(g.dh_prev);
      std::copy(g.dx.begin(), g.dx.end(), grad_in.row(row));
    }
  }
  return grad_in;
}

Matrix encode(const ParameterStore& store, const EncoderParams& p, const Matrix& frames,
              EncoderTape* tape) {
  if (frames.cols != p.input_dim) {
    throw ShapeError("encode: frames have " + std::to_string(frames.cols) +
                     " columns, encoder expects " + std::to_string(p.input_dim));
  }
  if (tape) {
    tape->layers.clear();
    tape->layers.resize(p.layers.size());
  }
  Matrix cur = frames;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    EncoderTape::LayerTape* lt = tape ? &tape->layers[l] : nullptr;
    if (lt) lt->input = cur;
    Matrix fwd = run_direction(store, p.layers[l].fwd, cur, Direction::forward,
                               lt ? &lt->fwd : nullptr);
    if (!p.cfg.bidirectional) {
      cur = std::move(fwd);
      continue;
    }
    Matrix bwd = run_direction(store, p.layers[l].bwd, cur, Direction::backward,
                               lt ? &lt->bwd : nullptr);
    Matrix joined(fwd.rows, fwd.cols + bwd.cols);
    for (std::size_t t = 0; t < fwd.rows; ++t) {
      std::copy(fwd.row(t), fwd.row(t) + fwd.cols, joined.row(t));
      std::copy(bwd.row(t), bwd.row(t) + bwd.cols, joined.row(t) + fwd.cols);
    }
    cur = std::move(joined);
  }
  return cur;
}

Matrix encode_backward(const ParameterStore& store, const EncoderParams& p,
                       const EncoderTape& tape, const Matrix& grad_out, Gradients& grads) {
  if (tape.layers.size() != p.layers.size()) {
    throw ConfigError("encode_backward: tape has " + std::to_string(tape.layers.size()) +
                      " layers, encoder has " + std::to_string(p.layers.size()));
  }
  const std::size_t h_dim = p.cfg.hidden_dim;
  Matrix cur = grad_out;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const EncoderTape::LayerTape& lt = tape.layers[l];
    if (!p.cfg.bidirectional) {
      cur = run_direction_backward(store, p.layers[l].fwd, lt.fwd, cur, grads);
      continue;
    }
    Matrix g_fwd(cur.rows, h_dim), g_bwd(cur.rows, h_dim);
    for (std::size_t t = 0; t < cur.rows; ++t) {
      std::copy(cur.row(t), cur.row(t) + h_dim, g_fwd.row(t));
      std::copy(cur.row(t) + h_dim, cur.row(t) + 2 * h_dim, g_bwd.row(t));
    }
    Matrix gin = run_direction_backward(store, p.layers[l].fwd, lt.fwd, g_fwd, grads);
    Matrix gin_b = run_direction_backward(store, p.layers[l].bwd, lt.bwd, g_bwd, grads);
    for (std::size_t i = 0; i < gin.data.size(); ++i) gin.data[i] += gin_b.data[i];
    cur = std::move(gin);
  }
  return cur;
}

}  // namespace mmseq
