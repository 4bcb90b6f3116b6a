#include "mmseq/fusion.hpp"

#include <cmath>
#include <string>

#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"

namespace mmseq {

std::size_t fused_dim(const FusionConfig& cfg, std::size_t d_visual, std::size_t d_audio) {
  switch (cfg.mode) {
    case FusionMode::concat:
      return d_visual + d_audio;
    case FusionMode::shared_space:
      return cfg.shared_dim;
    case FusionMode::projection:
      return 2 * cfg.shared_dim;
  }
  return 0;
}

FusionParams add_fusion_params(ParameterStore& store, const FusionConfig& cfg,
                               std::size_t d_visual, std::size_t d_audio,
                               const std::string& prefix) {
  if (cfg.shared_dim < 1) {
    throw ConfigError("fusion: shared_dim must be >= 1");
  }
  if (cfg.lambda_align < 0.0) {
    throw ConfigError("fusion: lambda_align must be >= 0");
  }
  FusionParams p;
  if (cfg.mode == FusionMode::shared_space) {
    p.w_joint = store.add(prefix + ".w_joint", cfg.shared_dim, d_visual + d_audio);
    p.b_joint = store.add(prefix + ".b_joint", cfg.shared_dim, 1);
  } else if (cfg.mode == FusionMode::projection) {
    p.w_proj_vis = store.add(prefix + ".w_proj_vis", cfg.shared_dim, d_visual);
    p.b_proj_vis = store.add(prefix + ".b_proj_vis", cfg.shared_dim, 1);
    p.w_proj_aud = store.add(prefix + ".w_proj_aud", cfg.shared_dim, d_audio);
    p.b_proj_aud = store.add(prefix + ".b_proj_aud", cfg.shared_dim, 1);
  }
  return p;
}

void init_fusion_params(ParameterStore& store, const FusionConfig& cfg, const FusionParams& p,
                        SeedStream& seeds) {
  // fusion mapping weights: zero-mean normal, dev 0.01
  const InitScheme scheme = InitScheme::normal(0.0, 0.01);
  if (cfg.mode == FusionMode::shared_space) {
    for (ParamId id : {p.w_joint, p.b_joint}) {
      Matrix& m = store.value(id);
      m = init_matrix(m.rows, m.cols, scheme, seeds.next());
    }
  } else if (cfg.mode == FusionMode::projection) {
    for (ParamId id : {p.w_proj_vis, p.b_proj_vis, p.w_proj_aud, p.b_proj_aud}) {
      Matrix& m = store.value(id);
      m = init_matrix(m.rows, m.cols, scheme, seeds.next());
    }
  }
}

FuseResult fuse(const ParameterStore& store, const FusionConfig& cfg, const FusionParams& p,
                const Vec& visual, const Vec& audio, FusionTape* tape) {
  FuseResult out;
  switch (cfg.mode) {
    case FusionMode::concat: {
      out.fused = concat(visual, audio);
      break;
    }
    case FusionMode::shared_space: {
      const Matrix& w = store.value(p.w_joint);
      if (w.cols != visual.size() + audio.size()) {
        throw ShapeError("fuse: modalities total " +
                         std::to_string(visual.size() + audio.size()) +
                         " entries but W_joint is " + std::to_string(w.rows) + "x" +
                         std::to_string(w.cols));
      }
      Vec joint = concat(visual, audio);
      Vec pre = store.value(p.b_joint).data;
      kernels::matvec_acc(w, joint.data(), pre.data());
      out.fused.resize(pre.size());
      for (std::size_t j = 0; j < pre.size(); ++j) out.fused[j] = std::tanh(pre[j]);
      if (tape) tape->fused = out.fused;
      break;
    }
    case FusionMode::projection: {
      const Matrix& wv = store.value(p.w_proj_vis);
      const Matrix& wa = store.value(p.w_proj_aud);
      if (wv.cols != visual.size()) {
        throw ShapeError("fuse: visual has length " + std::to_string(visual.size()) +
                         " but its projection is " + std::to_string(wv.rows) + "x" +
                         std::to_string(wv.cols));
      }
      if (wa.cols != audio.size()) {
        throw ShapeError("fuse: audio has length " + std::to_string(audio.size()) +
                         " but its projection is " + std::to_string(wa.rows) + "x" +
                         std::to_string(wa.cols));
      }
      Vec pv = store.value(p.b_proj_vis).data;
      kernels::matvec_acc(wv, visual.data(), pv.data());
      Vec pa = store.value(p.b_proj_aud).data;
      kernels::matvec_acc(wa, audio.data(), pa.data());
      double align = 0.0;
      for (std::size_t j = 0; j < pv.size(); ++j) {
        const double d = pv[j] - pa[j];
        align += d * d;
      }
      out.fused = concat(pv, pa);
      out.align_loss = align;
      if (tape) {
        tape->proj_vis = std::move(pv);
        tape->proj_aud = std::move(pa);
      }
      break;
    }
  }
  return out;
}

FuseGrad fuse_backward(const ParameterStore& store, const FusionConfig& cfg,
                       const FusionParams& p, const FusionTape& tape, const Vec& visual,
                       const Vec& audio, const Vec& d_fused, double d_align, Gradients& grads) {
  FuseGrad out;
  out.d_visual.assign(visual.size(), 0.0);
  out.d_audio.assign(audio.size(), 0.0);
  switch (cfg.mode) {
    case FusionMode::concat: {
      for (std::size_t j = 0; j < visual.size(); ++j) out.d_visual[j] = d_fused[j];
      for (std::size_t j = 0; j < audio.size(); ++j) out.d_audio[j] = d_fused[visual.size() + j];
      break;
    }
    case FusionMode::shared_space: {
      const std::size_t s = cfg.shared_dim;
      Vec d_pre(s);
      for (std::size_t j = 0; j < s; ++j) {
        d_pre[j] = d_fused[j] * (1.0 - tape.fused[j] * tape.fused[j]);
      }
      Vec joint = concat(visual, audio);
      kernels::outer_acc(grads.at(p.w_joint), d_pre.data(), joint.data());
      for (std::size_t j = 0; j < s; ++j) grads.at(p.b_joint).data[j] += d_pre[j];
      Vec d_joint(joint.size(), 0.0);
      kernels::matvec_t_acc(store.value(p.w_joint), d_pre.data(), d_joint.data());
      for (std::size_t j = 0; j < visual.size(); ++j) out.d_visual[j] = d_joint[j];
      for (std::size_t j = 0; j < audio.size(); ++j) out.d_audio[j] = d_joint[visual.size() + j];
      break;
    }
    case FusionMode::projection: {
      const std::size_t s = cfg.shared_dim;
      Vec dp(s), dq(s);
      for (std::size_t j = 0; j < s; ++j) {
        const double gap = 2.0 * d_align * (tape.proj_vis[j] - tape.proj_aud[j]);
        dp[j] = d_fused[j] + gap;
        dq[j] = d_fused[s + j] - gap;
      }
      kernels::outer_acc(grads.at(p.w_proj_vis), dp.data(), visual.data());
      kernels::outer_acc(grads.at(p.w_proj_aud), dq.data(), audio.data());
      for (std::size_t j = 0; j < s; ++j) {
        grads.at(p.b_proj_vis).data[j] += dp[j];
        grads.at(p.b_proj_aud).data[j] += dq[j];
      }
      kernels::matvec_t_acc(store.value(p.w_proj_vis), dp.data(), out.d_visual.data());
      kernels::matvec_t_acc(store.value(p.w_proj_aud), dq.data(), out.d_audio.data());
      break;
    }
  }
  return out;
}

FuseGrad align_loss_gradient(const ParameterStore& store, const FusionConfig& cfg,
                             const FusionParams& p, const Vec& visual, const Vec& audio,
                             Gradients& grads) {
  if (cfg.mode != FusionMode::projection) {
    throw ConfigError("align_loss_gradient: requires projection fusion mode");
  }
  FusionTape tape;
  fuse(store, cfg, p, visual, audio, &tape);
  const Vec zero(2 * cfg.shared_dim, 0.0);
  return fuse_backward(store, cfg, p, tape, visual, audio, zero, 1.0, grads);
}

}  // namespace mmseq
