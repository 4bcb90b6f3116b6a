#pragma once

// Shared builders for model/training tests.

#include <string>
#include <vector>

#include "mmseq/dataset.hpp"
#include "mmseq/model.hpp"
#include "mmseq/rng.hpp"

namespace helpers {

inline mmseq::FrameExample random_example(mmseq::SplitMix64& rng, std::size_t t_len,
                                          std::size_t dv, std::size_t da,
                                          std::size_t num_classes, const std::string& id) {
  mmseq::FrameExample ex;
  ex.video_id = id;
  ex.visual = mmseq::Matrix(t_len, dv);
  ex.audio = mmseq::Matrix(t_len, da);
  for (double& v : ex.visual.data) v = rng.next_gaussian();
  for (double& v : ex.audio.data) v = rng.next_gaussian();
  ex.mean_visual = mmseq::column_means(ex.visual);
  ex.mean_audio = mmseq::column_means(ex.audio);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (rng.next_unit() < 0.4) ex.labels.push_back(static_cast<std::int32_t>(c));
  }
  if (ex.labels.empty()) ex.labels.push_back(static_cast<std::int32_t>(rng.next_below(num_classes)));
  return ex;
}

inline std::vector<mmseq::FrameExample> random_batch(mmseq::SplitMix64& rng, std::size_t n,
                                                     std::size_t t_len, std::size_t dv,
                                                     std::size_t da, std::size_t num_classes) {
  std::vector<mmseq::FrameExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(random_example(rng, t_len, dv, da, num_classes, "t" + std::to_string(i)));
  }
  return out;
}

inline mmseq::ModelConfig small_config(mmseq::CellKind cell, bool bidir, std::size_t layers,
                                       mmseq::FusionMode fusion, bool attention) {
  mmseq::ModelConfig cfg;
  cfg.cell = cell;
  cfg.bidirectional = bidir;
  cfg.num_layers = layers;
  cfg.hidden_dim = 6;
  cfg.fusion.mode = fusion;
  cfg.fusion.shared_dim = 4;
  cfg.fusion.lambda_align = 0.1;
  cfg.attention = attention;
  cfg.num_classes = 4;
  cfg.visual_dim = 5;
  cfg.audio_dim = 3;
  return cfg;
}

}  // namespace helpers
