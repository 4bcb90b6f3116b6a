#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mmseq/classifier.hpp"

namespace mmseq {

// Per-video ranked (class id, confidence) pairs.
using PredictionList = std::vector<std::pair<std::int32_t, double>>;
using PredictionSet = std::map<std::string, PredictionList>;
using GroundTruth = std::map<std::string, LabelSet>;

struct GapReport {
  double gap = 0.0;
  std::size_t retained = 0;   // pooled predictions after the per-video top-k cut
  std::size_t positives = 0;  // total ground-truth (video, label) pairs

  struct LedgerEntry {
    double confidence;
    std::string video_id;
    std::int32_t class_id;
    bool correct;
  };
  // Globally sorted: descending confidence, ties by video id then class id.
  std::vector<LedgerEntry> ledger;
};

// Global average precision at k: retain each video's top-k predictions
// (ties by ascending class id), pool globally, sort by descending
// confidence, and sum precision-at-i times the recall increment 1/P.
GapReport gap_at_k(const PredictionSet& preds, const GroundTruth& truth, std::size_t k = 20);

}  // namespace mmseq
