#pragma once

// Brute-force global-average-precision oracle, coded straight from the
// metric's definition and independent from the library implementation:
// keep each video's k highest-confidence predictions, pool them into one
// global list sorted by confidence, then sum precision(i) * delta_recall(i)
// where delta_recall is 1/P for each correct prediction.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using PredictionMap = std::map<std::string, std::vector<std::pair<std::int32_t, double>>>;
using TruthMap = std::map<std::string, std::vector<std::int32_t>>;

inline double gap_reference(const PredictionMap& preds, const TruthMap& truth, std::size_t k) {
  std::size_t total_positives = 0;
  for (const auto& [vid, labels] : truth) total_positives += labels.size();
  if (total_positives == 0) return 0.0;

  struct Entry {
    double conf;
    std::string vid;
    std::int32_t cls;
    bool correct;
  };
  std::vector<Entry> global;
  for (const auto& [vid, plist] : preds) {
    auto ranked = plist;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return std::make_tuple(-a.second, a.first) < std::make_tuple(-b.second, b.first);
    });
    const auto& labels = truth.at(vid);
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
      const bool correct =
          std::find(labels.begin(), labels.end(), ranked[i].first) != labels.end();
      global.push_back({ranked[i].second, vid, ranked[i].first, correct});
    }
  }
  std::stable_sort(global.begin(), global.end(), [](const Entry& a, const Entry& b) {
    return std::make_tuple(-a.conf, a.vid, a.cls) < std::make_tuple(-b.conf, b.vid, b.cls);
  });

  double gap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < global.size(); ++i) {
    if (global[i].correct) {
      ++hits;
      const double precision = static_cast<double>(hits) / static_cast<double>(i + 1);
      gap += precision * (1.0 / static_cast<double>(total_positives));
    }
  }
  return gap;
}

}  // namespace oracle
