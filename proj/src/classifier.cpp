#include "mmseq/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"

namespace mmseq {

namespace {
constexpr double kScoreClamp = 1e-12;
}

bool has_label(const LabelSet& labels, std::int32_t cls) {
  return std::binary_search(labels.begin(), labels.end(), cls);
}

HeadParams add_head_params(ParameterStore& store, const std::string& prefix, std::size_t rep_dim,
                           std::size_t num_classes) {
  if (num_classes < 1) {
    throw ConfigError("head: num_classes must be >= 1");
  }
  HeadParams p;
  p.rep_dim = rep_dim;
  p.num_classes = num_classes;
  p.w_out = store.add(prefix + ".w_out", num_classes, rep_dim);
  p.b_out = store.add(prefix + ".b_out", num_classes, 1);
  return p;
}

void init_head_params(ParameterStore& store, const HeadParams& p, SeedStream& seeds) {
  Matrix& w = store.value(p.w_out);
  w = init_matrix(w.rows, w.cols, InitScheme::glorot(), seeds.next());
}

Vec predict_scores(const ParameterStore& store, const HeadParams& p, const Vec& rep) {
  if (rep.size() != p.rep_dim) {
    throw ShapeError("predict_scores: representation has length " + std::to_string(rep.size()) +
                     ", head expects " + std::to_string(p.rep_dim));
  }
  Vec logits = store.value(p.b_out).data;
  kernels::matvec_acc(store.value(p.w_out), rep.data(), logits.data());
  for (double& v : logits) v = sigmoid(v);
  return logits;
}

double bce_loss(const Vec& scores, const LabelSet& truth) {
  double loss = 0.0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const double s = scores[c];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw NumericError("bce_loss: score for class " + std::to_string(c) +
                         " is outside [0, 1]");
    }
    const double clamped = std::min(std::max(s, kScoreClamp), 1.0 - kScoreClamp);
    const bool y = has_label(truth, static_cast<std::int32_t>(c));
    loss += y ? -std::log(clamped) : -std::log(1.0 - clamped);
  }
  return loss / static_cast<double>(scores.size());
}

double total_loss(double bce, double align_loss, double lambda) {
  return bce + lambda * align_loss;
}

Vec head_backward(const ParameterStore& store, const HeadParams& p, const Vec& rep,
                  const Vec& scores, const LabelSet& truth, double upstream, Gradients& grads) {
  const std::size_t n = p.num_classes;
  Vec d_logits(n);
  const double inv_c = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double s = scores[c];
    // the loss is flat where the clamp is active
    if (s <= kScoreClamp || s >= 1.0 - kScoreClamp) {
      d_logits[c] = 0.0;
      continue;
    }
    const double y = has_label(truth, static_cast<std::int32_t>(c)) ? 1.0 : 0.0;
    d_logits[c] = upstream * (s - y) * inv_c;
  }
  kernels::outer_acc(grads.at(p.w_out), d_logits.data(), rep.data());
  for (std::size_t c = 0; c < n; ++c) grads.at(p.b_out).data[c] += d_logits[c];
  Vec d_rep(p.rep_dim, 0.0);
  kernels::matvec_t_acc(store.value(p.w_out), d_logits.data(), d_rep.data());
  return d_rep;
}

}  // namespace mmseq
