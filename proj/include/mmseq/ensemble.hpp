#pragma once

#include <vector>

#include "mmseq/metrics.hpp"

namespace mmseq {

// Combine per-model prediction sets with weights proportional to each
// model's GAP score. Per video and class the combined score is
// sum_i alpha_i * s_i, a model missing the class contributing 0; each
// video keeps its top-k combined classes (ties by ascending class id).
PredictionSet ensemble_combine(const std::vector<PredictionSet>& model_preds,
                               const std::vector<double>& model_gaps, std::size_t k);

}  // namespace mmseq
