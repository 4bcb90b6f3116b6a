#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmseq/attention.hpp"
#include "mmseq/classifier.hpp"
#include "mmseq/dataset.hpp"
#include "mmseq/encoder.hpp"
#include "mmseq/fusion.hpp"
#include "mmseq/params.hpp"

namespace mmseq {

struct ModelConfig {
  CellKind cell = CellKind::gru;
  bool bidirectional = true;
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 16;
  FusionConfig fusion;
  bool attention = false;
  std::size_t embed_dim = 0;  // 0: same as the fused frame width
  std::size_t attn_dim = 0;   // 0: same as the encoder output width
  bool video_level = false;   // logistic-regression baseline over mean features
  std::size_t num_classes = 0;
  std::size_t visual_dim = 0;
  std::size_t audio_dim = 0;
  std::size_t max_frames = 300;
};

struct Model {
  ModelConfig cfg;
  std::uint64_t init_seed = 0;
  ParameterStore params;
  Gradients grads;
  FusionParams fusion;
  EncoderParams encoder;
  AttentionParams attention;
  HeadParams head;

  std::size_t fused_width() const {
    return fused_dim(cfg.fusion, cfg.visual_dim, cfg.audio_dim);
  }
  std::size_t encoder_input_dim() const {
    return cfg.attention ? attention.embed_dim : fused_width();
  }
  std::size_t rep_dim() const {
    return cfg.video_level ? fused_width()
                           : (cfg.bidirectional ? 2 * cfg.hidden_dim : cfg.hidden_dim);
  }
};

// Registers and seeds every parameter in a fixed order; two builds from the
// same (config, seed) are bit-identical.
Model build_model(const ModelConfig& cfg, std::uint64_t seed);

// Per-example forward pass with optional tapes for the backward pass.
struct ItemForward {
  Vec scores;
  Vec rep;
  double bce = 0.0;
  double align_sum = 0.0;
  double total = 0.0;

  // tapes (filled only when requested)
  Matrix visual, audio;  // frames actually consumed (after any truncation)
  Matrix fused;
  std::vector<FusionTape> fusion_tapes;
  Matrix encoder_out;
  EncoderTape encoder_tape;
  AttentionTape attention_tape;
};

ItemForward forward_item(const Model& m, const FrameExample& ex, bool keep_tapes);

// Accumulates d(upstream * item_total_loss)/d(theta) into `grads`. The
// forward result must have been produced with tapes from the same example.
void backward_item(const Model& m, const ItemForward& f, const FrameExample& ex, double upstream,
                   Gradients& grads);

// Scores for one example, forward only.
Vec score_example(const Model& m, const FrameExample& ex);

// Full-precision predictions over every class for each example.
PredictionSet predict_all(const Model& m, const std::vector<FrameExample>& examples);

// Submission-shaped predictions: confidences quantized to the CSV
// resolution, per video top-k by (confidence desc, class id asc).
PredictionSet predict_top_k(const Model& m, const std::vector<FrameExample>& examples,
                            std::size_t k);

}  // namespace mmseq
