#include "mmseq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mmseq/error.hpp"

namespace mmseq {

GapReport gap_at_k(const PredictionSet& preds, const GroundTruth& truth, std::size_t k) {
  if (k < 1) {
    throw ConfigError("gap_at_k: k must be >= 1");
  }
  GapReport report;
  for (const auto& [vid, labels] : truth) report.positives += labels.size();

  for (const auto& [vid, plist] : preds) {
    const auto it = truth.find(vid);
    if (it == truth.end()) {
      throw DataError("gap_at_k: video '" + vid + "' is not in the ground truth");
    }
    PredictionList sorted = plist;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].first == sorted[i - 1].first) {
        throw DataError("gap_at_k: video '" + vid + "' predicts class " +
                        std::to_string(sorted[i].first) + " more than once");
      }
    }
    const std::size_t keep = std::min(k, sorted.size());
    for (std::size_t i = 0; i < keep; ++i) {
      if (!std::isfinite(sorted[i].second)) {
        throw DataError("gap_at_k: non-finite confidence for video '" + vid + "'");
      }
      report.ledger.push_back({sorted[i].second, vid, sorted[i].first,
                               has_label(it->second, sorted[i].first)});
    }
  }

  std::sort(report.ledger.begin(), report.ledger.end(),
            [](const GapReport::LedgerEntry& a, const GapReport::LedgerEntry& b) {
              if (a.confidence != b.confidence) return a.confidence > b.confidence;
              if (a.video_id != b.video_id) return a.video_id < b.video_id;
              return a.class_id < b.class_id;
            });

  report.retained = report.ledger.size();
  if (report.positives == 0) return report;

  std::size_t correct_so_far = 0;
  double gap = 0.0;
  for (std::size_t i = 0; i < report.ledger.size(); ++i) {
    if (report.ledger[i].correct) {
      ++correct_so_far;
      const double precision =
          static_cast<double>(correct_so_far) / static_cast<double>(i + 1);
      gap += precision / static_cast<double>(report.positives);
    }
  }
  report.gap = gap;
  return report;
}

}  // namespace mmseq
