#pragma once

#include <cstddef>
#include <string>

#include "mmseq/linalg.hpp"
#include "mmseq/params.hpp"
#include "mmseq/rng.hpp"

namespace mmseq {

enum class FusionMode { concat, shared_space, projection };

struct FusionConfig {
  FusionMode mode = FusionMode::concat;
  std::size_t shared_dim = 8;
  double lambda_align = 0.1;
};

// shared_space maps the concatenated modalities through one tanh layer;
// projection maps each modality into a common space with its own affine map.
struct FusionParams {
  ParamId w_joint, b_joint;
  ParamId w_proj_vis, b_proj_vis;
  ParamId w_proj_aud, b_proj_aud;
};

std::size_t fused_dim(const FusionConfig& cfg, std::size_t d_visual, std::size_t d_audio);

FusionParams add_fusion_params(ParameterStore& store, const FusionConfig& cfg,
                               std::size_t d_visual, std::size_t d_audio,
                               const std::string& prefix);
void init_fusion_params(ParameterStore& store, const FusionConfig& cfg, const FusionParams& p,
                        SeedStream& seeds);

struct FusionTape {
  Vec fused;     // shared_space: tanh output
  Vec proj_vis;  // projection: f(visual)
  Vec proj_aud;  // projection: g(audio)
};

struct FuseResult {
  Vec fused;
  double align_loss = 0.0;
};

// Combine one frame's (or one video's) modality vectors.
//   concat:       [visual; audio], align 0
//   shared_space: tanh(W [visual; audio] + b), align 0
//   projection:   [f(visual); g(audio)], align ||f(visual) - g(audio)||^2
FuseResult fuse(const ParameterStore& store, const FusionConfig& cfg, const FusionParams& p,
                const Vec& visual, const Vec& audio, FusionTape* tape = nullptr);

struct FuseGrad {
  Vec d_visual, d_audio;
};

// d_fused is the upstream gradient on the fused vector; d_align the upstream
// weight on the alignment penalty (lambda / batch for training).
FuseGrad fuse_backward(const ParameterStore& store, const FusionConfig& cfg,
                       const FusionParams& p, const FusionTape& tape, const Vec& visual,
                       const Vec& audio, const Vec& d_fused, double d_align, Gradients& grads);

// Gradient of the alignment penalty alone with respect to the projection
// parameters and both inputs. Projection mode only.
FuseGrad align_loss_gradient(const ParameterStore& store, const FusionConfig& cfg,
                             const FusionParams& p, const Vec& visual, const Vec& audio,
                             Gradients& grads);

}  // namespace mmseq
