#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mmseq/linalg.hpp"
#include "mmseq/params.hpp"
#include "mmseq/rng.hpp"

namespace mmseq {

// Sorted, duplicate-free class ids.
using LabelSet = std::vector<std::int32_t>;

bool has_label(const LabelSet& labels, std::int32_t cls);

struct HeadParams {
  std::size_t rep_dim = 0;
  std::size_t num_classes = 0;
  ParamId w_out, b_out;
};

HeadParams add_head_params(ParameterStore& store, const std::string& prefix, std::size_t rep_dim,
                           std::size_t num_classes);
void init_head_params(ParameterStore& store, const HeadParams& p, SeedStream& seeds);

// Per-class sigmoid scores: sigmoid(W rep + b).
Vec predict_scores(const ParameterStore& store, const HeadParams& p, const Vec& rep);

// Mean over classes of binary cross-entropy against the label set. Scores
// are clamped to [1e-12, 1 - 1e-12] inside the loss only.
double bce_loss(const Vec& scores, const LabelSet& truth);

double total_loss(double bce, double align_loss, double lambda);

// Accumulates head gradients scaled by `upstream`; returns the gradient
// with respect to the representation.
Vec head_backward(const ParameterStore& store, const HeadParams& p, const Vec& rep,
                  const Vec& scores, const LabelSet& truth, double upstream, Gradients& grads);

}  // namespace mmseq
