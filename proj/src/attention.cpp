#include "mmseq/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"

namespace mmseq {

AttentionParams add_attention_params(ParameterStore& store, const std::string& prefix,
                                     std::size_t raw_dim, std::size_t embed_dim,
                                     std::size_t rep_dim, std::size_t attn_dim) {
  AttentionParams p;
  p.raw_dim = raw_dim;
  p.embed_dim = embed_dim;
  p.rep_dim = rep_dim;
  p.attn_dim = attn_dim;
  p.w_embed = store.add(prefix + ".w_embed", embed_dim, raw_dim);
  p.w_score = store.add(prefix + ".w_score", attn_dim, rep_dim);
  p.b_score = store.add(prefix + ".b_score", attn_dim, 1);
  p.u_ctx = store.add(prefix + ".u_ctx", attn_dim, 1);
  return p;
}

void init_attention_params(ParameterStore& store, const AttentionParams& p, SeedStream& seeds) {
  const InitScheme glorot = InitScheme::glorot();
  for (ParamId id : {p.w_embed, p.w_score, p.b_score}) {
    Matrix& m = store.value(id);
    m = init_matrix(m.rows, m.cols, glorot, seeds.next());
  }
  Matrix& u = store.value(p.u_ctx);
  do {
    u = init_matrix(u.rows, u.cols, glorot, seeds.next());
  } while (std::all_of(u.data.begin(), u.data.end(), [](double v) { return v == 0.0; }));
}

Matrix embed_frames(const ParameterStore& store, ParamId w_embed, const Matrix& raw) {
  const Matrix& w = store.value(w_embed);
  if (raw.cols != w.cols) {
    throw ShapeError("embed_frames: frames have " + std::to_string(raw.cols) +
                     " columns but W_embed is " + std::to_string(w.rows) + "x" +
                     std::to_string(w.cols));
  }
  Matrix out(raw.rows, w.rows);
  for (std::size_t t = 0; t < raw.rows; ++t) {
    kernels::matvec_acc(w, raw.row(t), out.row(t));
  }
  return out;
}

Matrix embed_frames_backward(const ParameterStore& store, ParamId w_embed, const Matrix& raw,
                             const Matrix& grad_embedded, Gradients& grads) {
  const Matrix& w = store.value(w_embed);
  Matrix grad_raw(raw.rows, raw.cols);
  for (std::size_t t = 0; t < raw.rows; ++t) {
    kernels::outer_acc(grads.at(w_embed), grad_embedded.row(t), raw.row(t));
    kernels::matvec_t_acc(w, grad_embedded.row(t), grad_raw.row(t));
  }
  return grad_raw;
}

AttentionResult attention_pool(const ParameterStore& store, const AttentionParams& p,
                               const Matrix& h, AttentionTape* tape) {
  if (h.rows == 0) {
    throw DataError("attention_pool: empty sequence");
  }
  if (h.cols != p.rep_dim) {
    throw ShapeError("attention_pool: rows have width " + std::to_string(h.cols) +
                     ", attention expects " + std::to_string(p.rep_dim));
  }
  const std::size_t t_len = h.rows;
  const Matrix& w = store.value(p.w_score);
  const Vec& b = store.value(p.b_score).data;
  const Vec& u_ctx = store.value(p.u_ctx).data;

  Matrix scored(t_len, p.attn_dim);
  Vec energy(t_len, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    Vec a = b;
    kernels::matvec_acc(w, h.row(t), a.data());
    double dot = 0.0;
    for (std::size_t j = 0; j < p.attn_dim; ++j) {
      scored(t, j) = std::tanh(a[j]);
      dot += scored(t, j) * u_ctx[j];
    }
    energy[t] = dot;
  }

  AttentionResult out;
  out.alphas = softmax(energy);
  out.pooled.assign(p.rep_dim, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double a = out.alphas[t];
    const double* row = h.row(t);
    for (std::size_t j = 0; j < p.rep_dim; ++j) out.pooled[j] += a * row[j];
  }

  if (tape) {
    tape->h = h;
    tape->scored = std::move(scored);
    tape->alphas = out.alphas;
  }
  return out;
}

Matrix attention_pool_backward(const ParameterStore& store, const AttentionParams& p,
                               const AttentionTape& tape, const Vec& d_pooled, Gradients& grads) {
  const std::size_t t_len = tape.h.rows;
  if (d_pooled.size() != p.rep_dim) {
    throw ShapeError("attention_pool_backward: upstream gradient has length " +
                     std::to_string(d_pooled.size()) + ", expected " + std::to_string(p.rep_dim));
  }
  const Matrix& w = store.value(p.w_score);
  const Vec& u_ctx = store.value(p.u_ctx).data;

  Matrix grad_h(t_len, p.rep_dim);
  Vec d_alpha(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* row = tape.h.row(t);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.rep_dim; ++j) {
      dot += d_pooled[j] * row[j];
      grad_h(t, j) = tape.alphas[t] * d_pooled[j];
    }
    d_alpha[t] = dot;
  }

  // softmax backward
  double mix = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) mix += tape.alphas[t] * d_alpha[t];
  Vec d_energy(t_len);
  for (std::size_t t = 0; t < t_len; ++t) d_energy[t] = tape.alphas[t] * (d_alpha[t] - mix);

  Vec d_score(p.attn_dim);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < p.attn_dim; ++j) {
      const double u_t = tape.scored(t, j);
      grads.at(p.u_ctx).data[j] += d_energy[t] * u_t;
      d_score[j] = d_energy[t] * u_ctx[j] * (1.0 - u_t * u_t);
      grads.at(p.b_score).data[j] += d_score[j];
    }
    kernels::outer_acc(grads.at(p.w_score), d_score.data(), tape.h.row(t));
    kernels::matvec_t_acc(w, d_score.data(), grad_h.row(t));
  }
  return grad_h;
}

Vec laststate_pool(const Vec& forward_last, const Vec& backward_first) {
  if (forward_last.size() != backward_first.size()) {
    throw ShapeError("laststate_pool: forward state has length " +
                     std::to_string(forward_last.size()) + ", backward has " +
                     std::to_string(backward_first.size()));
  }
  return concat(forward_last, backward_first);
}

}  // namespace mmseq
