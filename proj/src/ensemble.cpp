#include "mmseq/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "mmseq/error.hpp"

namespace mmseq {

PredictionSet ensemble_combine(const std::vector<PredictionSet>& model_preds,
                               const std::vector<double>& model_gaps, std::size_t k) {
  if (model_preds.empty()) {
    throw ConfigError("ensemble_combine: need at least one model");
  }
  if (model_preds.size() != model_gaps.size()) {
    throw ConfigError("ensemble_combine: " + std::to_string(model_preds.size()) +
                      " prediction sets but " + std::to_string(model_gaps.size()) + " gaps");
  }
  if (k < 1) {
    throw ConfigError("ensemble_combine: k must be >= 1");
  }
  double gap_sum = 0.0;
  for (double g : model_gaps) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw ConfigError("ensemble_combine: gap weights must be finite and >= 0");
    }
    gap_sum += g;
  }
  if (gap_sum <= 0.0) {
    throw ConfigError("ensemble_combine: all gap weights are zero, weights are degenerate");
  }

  for (std::size_t i = 1; i < model_preds.size(); ++i) {
    if (model_preds[i].size() != model_preds[0].size()) {
      throw DataError("ensemble_combine: model " + std::to_string(i) +
                      " covers a different video set");
    }
    for (const auto& [vid, plist] : model_preds[i]) {
      if (!model_preds[0].count(vid)) {
        throw DataError("ensemble_combine: model " + std::to_string(i) + " has video '" + vid +
                        "' missing from model 0");
      }
    }
  }

  std::vector<double> alpha(model_gaps.size());
  for (std::size_t i = 0; i < model_gaps.size(); ++i) alpha[i] = model_gaps[i] / gap_sum;

  PredictionSet out;
  for (const auto& [vid, base] : model_preds[0]) {
    std::map<std::int32_t, double> score;
    for (std::size_t i = 0; i < model_preds.size(); ++i) {
      const auto& plist = model_preds[i].at(vid);
      for (const auto& [cls, conf] : plist) score[cls] += alpha[i] * conf;
    }
    PredictionList combined(score.begin(), score.end());
    std::sort(combined.begin(), combined.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (combined.size() > k) combined.resize(k);
    out[vid] = std::move(combined);
  }
  return out;
}

}  // namespace mmseq
