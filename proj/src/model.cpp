#include "mmseq/model.hpp"

#include <algorithm>
#include <string>

#include "mmseq/error.hpp"

namespace mmseq {

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.num_classes < 1 || cfg.visual_dim < 1 || cfg.audio_dim < 1) {
    throw ConfigError("build_model: num_classes and feature dims must be >= 1");
  }
  if (!cfg.video_level && (cfg.num_layers < 1 || cfg.hidden_dim < 1)) {
    throw ConfigError("build_model: num_layers and hidden_dim must be >= 1");
  }
  if (cfg.max_frames < 1) {
    throw ConfigError("build_model: max_frames must be >= 1");
  }

  Model m;
  m.cfg = cfg;
  m.init_seed = seed;
  m.fusion = add_fusion_params(m.params, cfg.fusion, cfg.visual_dim, cfg.audio_dim, "fusion");

  if (!cfg.video_level) {
    const std::size_t fused = m.fused_width();
    std::size_t enc_in = fused;
    if (cfg.attention) {
      const std::size_t rep = cfg.bidirectional ? 2 * cfg.hidden_dim : cfg.hidden_dim;
      const std::size_t embed = cfg.embed_dim ? cfg.embed_dim : fused;
      const std::size_t attn = cfg.attn_dim ? cfg.attn_dim : rep;
      m.attention = add_attention_params(m.params, "attention", fused, embed, rep, attn);
      m.cfg.embed_dim = embed;
      m.cfg.attn_dim = attn;
      enc_in = embed;
    }
    EncoderConfig ec;
    ec.cell = cfg.cell;
    ec.hidden_dim = cfg.hidden_dim;
    ec.num_layers = cfg.num_layers;
    ec.bidirectional = cfg.bidirectional;
    m.encoder = add_encoder_params(m.params, ec, enc_in, "enc");
  }

  m.head = add_head_params(m.params, "head", m.rep_dim(), cfg.num_classes);

  SeedStream seeds(seed);
  init_fusion_params(m.params, cfg.fusion, m.fusion, seeds);
  if (!cfg.video_level) {
    if (cfg.attention) init_attention_params(m.params, m.attention, seeds);
    init_encoder_params(m.params, m.encoder, InitScheme::glorot(), seeds);
  }
  init_head_params(m.params, m.head, seeds);

  m.grads.reshape(m.params);
  return m;
}

namespace {

void check_example_dims(const Model& m, const FrameExample& ex) {
  if (ex.visual.cols != m.cfg.visual_dim || ex.audio.cols != m.cfg.audio_dim) {
    throw ShapeError("forward_item: example '" + ex.video_id + "' has feature widths " +
                     std::to_string(ex.visual.cols) + "/" + std::to_string(ex.audio.cols) +
                     ", model expects " + std::to_string(m.cfg.visual_dim) + "/" +
                     std::to_string(m.cfg.audio_dim));
  }
  if (ex.mean_visual.size() != m.cfg.visual_dim || ex.mean_audio.size() != m.cfg.audio_dim) {
    throw ShapeError("forward_item: example '" + ex.video_id + "' has mean widths " +
                     std::to_string(ex.mean_visual.size()) + "/" +
                     std::to_string(ex.mean_audio.size()));
  }
}

Matrix head_rows(const Matrix& src, std::size_t n) {
  Matrix out(n, src.cols);
  std::copy(src.data.begin(), src.data.begin() + static_cast<std::ptrdiff_t>(n * src.cols),
            out.data.begin());
  return out;
}

}  // namespace

ItemForward forward_item(const Model& m, const FrameExample& ex, bool keep_tapes) {
  check_example_dims(m, ex);
  ItemForward f;

  if (m.cfg.video_level) {
    FusionTape tape;
    FuseResult fr = fuse(m.params, m.cfg.fusion, m.fusion, ex.mean_visual, ex.mean_audio,
                         keep_tapes ? &tape : nullptr);
    f.rep = std::move(fr.fused);
    f.align_sum = fr.align_loss;
    if (keep_tapes) f.fusion_tapes.push_back(std::move(tape));
  } else {
    if (ex.visual.rows < 1) {
      throw DataError("forward_item: example '" + ex.video_id + "' has no frames");
    }
    const std::size_t t_len = std::min<std::size_t>(ex.visual.rows, m.cfg.max_frames);
    f.visual = t_len == ex.visual.rows ? ex.visual : head_rows(ex.visual, t_len);
    f.audio = t_len == ex.audio.rows ? ex.audio : head_rows(ex.audio, t_len);

    f.fused = Matrix(t_len, m.fused_width());
    if (keep_tapes) f.fusion_tapes.resize(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      Vec vis(f.visual.row(t), f.visual.row(t) + f.visual.cols);
      Vec aud(f.audio.row(t), f.audio.row(t) + f.audio.cols);
      FuseResult fr = fuse(m.params, m.cfg.fusion, m.fusion, vis, aud,
                           keep_tapes ? &f.fusion_tapes[t] : nullptr);
      f.align_sum += fr.align_loss;
      std::copy(fr.fused.begin(), fr.fused.end(), f.fused.row(t));
    }

    Matrix embedded;
    const Matrix* enc_input = &f.fused;
    if (m.cfg.attention) {
      embedded = embed_frames(m.params, m.attention.w_embed, f.fused);
      enc_input = &embedded;
    }
    f.encoder_out =
        encode(m.params, m.encoder, *enc_input, keep_tapes ? &f.encoder_tape : nullptr);

    if (m.cfg.attention) {
      AttentionResult ar = attention_pool(m.params, m.attention, f.encoder_out,
                                          keep_tapes ? &f.attention_tape : nullptr);
      f.rep = std::move(ar.pooled);
    } else if (m.cfg.bidirectional) {
      const std::size_t h = m.cfg.hidden_dim;
      Vec fwd_last(f.encoder_out.row(t_len - 1), f.encoder_out.row(t_len - 1) + h);
      Vec bwd_first(f.encoder_out.row(0) + h, f.encoder_out.row(0) + 2 * h);
      f.rep = laststate_pool(fwd_last, bwd_first);
    } else {
      f.rep.assign(f.encoder_out.row(t_len - 1),
                   f.encoder_out.row(t_len - 1) + m.cfg.hidden_dim);
    }
    if (!keep_tapes) {
      f.encoder_out = Matrix();
      f.fused = Matrix();
      f.visual = Matrix();
      f.audio = Matrix();
    }
  }

  f.scores = predict_scores(m.params, m.head, f.rep);
  f.bce = bce_loss(f.scores, ex.labels);
  f.total = total_loss(f.bce, f.align_sum, m.cfg.fusion.lambda_align);
  return f;
}

void backward_item(const Model& m, const ItemForward& f, const FrameExample& ex, double upstream,
                   Gradients& grads) {
  const double d_align = upstream * m.cfg.fusion.lambda_align;
  Vec d_rep = head_backward(m.params, m.head, f.rep, f.scores, ex.labels, upstream, grads);

  if (m.cfg.video_level) {
    if (f.fusion_tapes.empty()) {
      throw ConfigError("backward_item: forward pass was run without tapes");
    }
    fuse_backward(m.params, m.cfg.fusion, m.fusion, f.fusion_tapes[0], ex.mean_visual,
                  ex.mean_audio, d_rep, d_align, grads);
    return;
  }

  if (f.fused.rows == 0) {
    throw ConfigError("backward_item: forward pass was run without tapes");
  }
  const std::size_t t_len = f.fused.rows;
  const std::size_t h = m.cfg.hidden_dim;

  Matrix d_enc_out;
  if (m.cfg.attention) {
    d_enc_out = attention_pool_backward(m.params, m.attention, f.attention_tape, d_rep, grads);
  } else {
    d_enc_out = Matrix(t_len, m.encoder.output_dim());
    if (m.cfg.bidirectional) {
      for (std::size_t j = 0; j < h; ++j) {
        d_enc_out(t_len - 1, j) += d_rep[j];
        d_enc_out(0, h + j) += d_rep[h + j];
      }
    } else {
      for (std::size_t j = 0; j < h; ++j) d_enc_out(t_len - 1, j) += d_rep[j];
    }
  }

  Matrix d_enc_in = encode_backward(m.params, m.encoder, f.encoder_tape, d_enc_out, grads);

  Matrix d_fused;
  if (m.cfg.attention) {
    d_fused = embed_frames_backward(m.params, m.attention.w_embed, f.fused, d_enc_in, grads);
  } else {
    d_fused = std::move(d_enc_in);
  }

  for (std::size_t t = 0; t < t_len; ++t) {
    Vec vis(f.visual.row(t), f.visual.row(t) + f.visual.cols);
    Vec aud(f.audio.row(t), f.audio.row(t) + f.audio.cols);
    Vec d_f(d_fused.row(t), d_fused.row(t) + d_fused.cols);
    fuse_backward(m.params, m.cfg.fusion, m.fusion, f.fusion_tapes[t], vis, aud, d_f, d_align,
                  grads);
  }
}

Vec score_example(const Model& m, const FrameExample& ex) {
  return forward_item(m, ex, false).scores;
}

PredictionSet predict_all(const Model& m, const std::vector<FrameExample>& examples) {
  PredictionSet out;
  for (const FrameExample& ex : examples) {
    const Vec scores = score_example(m, ex);
    PredictionList plist;
    plist.reserve(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
      plist.emplace_back(static_cast<std::int32_t>(c), scores[c]);
    }
    out[ex.video_id] = std::move(plist);
  }
  return out;
}

PredictionSet predict_top_k(const Model& m, const std::vector<FrameExample>& examples,
                            std::size_t k) {
  if (k < 1) {
    throw ConfigError("predict_top_k: k must be >= 1");
  }
  PredictionSet out;
  for (const FrameExample& ex : examples) {
    const Vec scores = score_example(m, ex);
    PredictionList plist;
    plist.reserve(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
      plist.emplace_back(static_cast<std::int32_t>(c), quantize_confidence(scores[c]));
    }
    std::sort(plist.begin(), plist.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (plist.size() > k) plist.resize(k);
    out[ex.video_id] = std::move(plist);
  }
  return out;
}

}  // namespace mmseq
