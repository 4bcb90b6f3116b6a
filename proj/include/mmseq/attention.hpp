#pragma once

#include <cstddef>
#include <string>

#include "mmseq/linalg.hpp"
#include "mmseq/params.hpp"
#include "mmseq/rng.hpp"

namespace mmseq {

// Frame embedding plus attention-weighted pooling over encoder outputs.
struct AttentionParams {
  std::size_t raw_dim = 0;    // fused frame width fed to the embedding
  std::size_t embed_dim = 0;  // encoder input width
  std::size_t rep_dim = 0;    // encoder output width being pooled
  std::size_t attn_dim = 0;
  ParamId w_embed;            // embed_dim x raw_dim, no bias
  ParamId w_score, b_score;   // scoring MLP
  ParamId u_ctx;              // learned context vector
};

AttentionParams add_attention_params(ParameterStore& store, const std::string& prefix,
                                     std::size_t raw_dim, std::size_t embed_dim,
                                     std::size_t rep_dim, std::size_t attn_dim);

// All attention weights are glorot-normal; the context vector is re-drawn
// in the (theoretical) case every entry lands at zero.
void init_attention_params(ParameterStore& store, const AttentionParams& p, SeedStream& seeds);

// Row t of the result is W_embed * raw_t.
Matrix embed_frames(const ParameterStore& store, ParamId w_embed, const Matrix& raw);
// Returns the gradient with respect to `raw`.
Matrix embed_frames_backward(const ParameterStore& store, ParamId w_embed, const Matrix& raw,
                             const Matrix& grad_embedded, Gradients& grads);

struct AttentionTape {
  Matrix h;       // pooled rows
  Matrix scored;  // tanh(W h_t + b) rows
  Vec alphas;
};

struct AttentionResult {
  Vec pooled;
  Vec alphas;
};

// Softmax-weighted average of the rows of h, scored against the context
// vector. Alphas are positive and sum to 1.
AttentionResult attention_pool(const ParameterStore& store, const AttentionParams& p,
                               const Matrix& h, AttentionTape* tape = nullptr);

// Returns the gradient with respect to the pooled rows.
Matrix attention_pool_backward(const ParameterStore& store, const AttentionParams& p,
                               const AttentionTape& tape, const Vec& d_pooled, Gradients& grads);

// [final forward state, final backward state]; the non-attention readout.
Vec laststate_pool(const Vec& forward_last, const Vec& backward_first);

}  // namespace mmseq
