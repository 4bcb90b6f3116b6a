#include <doctest.h>

#include <cmath>

#include "mmseq/error.hpp"
#include "mmseq/fusion.hpp"
#include "mmseq/rng.hpp"

using namespace mmseq;

namespace {

Vec random_vec(std::size_t n, SplitMix64& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.next_gaussian();
  return v;
}

struct Fixture {
  ParameterStore store;
  FusionConfig cfg;
  FusionParams p;
};

Fixture make_fixture(FusionMode mode, std::size_t dv, std::size_t da, std::size_t shared,
                     std::uint64_t seed) {
  Fixture f;
  f.cfg.mode = mode;
  f.cfg.shared_dim = shared;
  f.p = add_fusion_params(f.store, f.cfg, dv, da, "fusion");
  SeedStream seeds(seed);
  init_fusion_params(f.store, f.cfg, f.p, seeds);
  return f;
}

double fd_err(double a, double n) {
  const double diff = std::abs(a - n);
  return diff <= 1e-9 ? 0.0 : diff / std::max(std::abs(n), 1e-8);
}

}  // namespace

TEST_CASE("concat fusion preserves both modalities at dataset-schema widths") {
  Fixture f = make_fixture(FusionMode::concat, 1024, 128, 8, 41);
  SplitMix64 rng(41);
  const Vec visual = random_vec(1024, rng);
  const Vec audio = random_vec(128, rng);
  const FuseResult r = fuse(f.store, f.cfg, f.p, visual, audio);
  CHECK(r.fused.size() == 1152);
  CHECK(r.align_loss == 0.0);
  for (std::size_t j = 0; j < 1024; ++j) CHECK(r.fused[j] == visual[j]);
  for (std::size_t j = 0; j < 128; ++j) CHECK(r.fused[1024 + j] == audio[j]);
}

TEST_CASE("shared-space fusion with zero parameters returns the zero vector") {
  ParameterStore store;
  FusionConfig cfg;
  cfg.mode = FusionMode::shared_space;
  cfg.shared_dim = 6;
  const FusionParams p = add_fusion_params(store, cfg, 4, 3, "fusion");
  const FuseResult r = fuse(store, cfg, p, Vec(4, 1.0), Vec(3, -1.0));
  CHECK(r.fused.size() == 6);
  CHECK(r.align_loss == 0.0);
  for (double v : r.fused) CHECK(v == 0.0);
}

TEST_CASE("shared-space output stays inside the tanh range") {
  Fixture f = make_fixture(FusionMode::shared_space, 5, 3, 4, 42);
  SplitMix64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const FuseResult r =
        fuse(f.store, f.cfg, f.p, random_vec(5, rng, 50.0), random_vec(3, rng, 50.0));
    for (double v : r.fused) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("projection fusion alignment is zero iff the projections agree") {
  Fixture f = make_fixture(FusionMode::projection, 4, 3, 5, 43);
  SplitMix64 rng(43);
  // zero inputs with equal biases -> equal projections
  for (std::size_t j = 0; j < 5; ++j) {
    f.store.value(f.p.b_proj_vis).data[j] = 0.25;
    f.store.value(f.p.b_proj_aud).data[j] = 0.25;
  }
  const FuseResult same = fuse(f.store, f.cfg, f.p, Vec(4, 0.0), Vec(3, 0.0));
  CHECK(same.align_loss == 0.0);
  CHECK(same.fused.size() == 10);

  const FuseResult diff = fuse(f.store, f.cfg, f.p, random_vec(4, rng), random_vec(3, rng));
  CHECK(diff.align_loss > 0.0);
  // align equals the squared distance of the two halves of the fused vector
  double want = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    const double d = diff.fused[j] - diff.fused[5 + j];
    want += d * d;
  }
  CHECK(std::abs(diff.align_loss - want) <= 1e-12);
}

TEST_CASE("alignment gradients vanish at the minimum") {
  Fixture f = make_fixture(FusionMode::projection, 3, 3, 4, 44);
  // identical projection maps and identical inputs -> f(x) = g(x)
  f.store.value(f.p.w_proj_aud) = f.store.value(f.p.w_proj_vis);
  f.store.value(f.p.b_proj_aud) = f.store.value(f.p.b_proj_vis);
  SplitMix64 rng(44);
  const Vec x = random_vec(3, rng);
  Gradients grads(f.store);
  const FuseGrad g = align_loss_gradient(f.store, f.cfg, f.p, x, x, grads);
  for (double v : g.d_visual) CHECK(std::abs(v) <= 1e-15);
  for (double v : g.d_audio) CHECK(std::abs(v) <= 1e-15);
  for (std::size_t i = 0; i < grads.count(); ++i) {
    for (double v : grads.at_index(i).data) CHECK(std::abs(v) <= 1e-15);
  }
}

TEST_CASE("alignment gradient matches the symbolic scalar case") {
  // f(x) = a x, g(y) = b y: d/da ||ax - by||^2 = 2 (ax - by) x
  ParameterStore store;
  FusionConfig cfg;
  cfg.mode = FusionMode::projection;
  cfg.shared_dim = 1;
  const FusionParams p = add_fusion_params(store, cfg, 1, 1, "fusion");
  const double a = 0.8, b = -0.3, x = 1.7, y = 0.6;
  store.value(p.w_proj_vis).data[0] = a;
  store.value(p.w_proj_aud).data[0] = b;
  Gradients grads(store);
  const FuseGrad g = align_loss_gradient(store, cfg, p, {x}, {y}, grads);
  const double gap = a * x - b * y;
  CHECK(grads.at(p.w_proj_vis).data[0] == doctest::Approx(2.0 * gap * x).epsilon(1e-12));
  CHECK(grads.at(p.w_proj_aud).data[0] == doctest::Approx(-2.0 * gap * y).epsilon(1e-12));
  CHECK(g.d_visual[0] == doctest::Approx(2.0 * gap * a).epsilon(1e-12));
  CHECK(g.d_audio[0] == doctest::Approx(-2.0 * gap * b).epsilon(1e-12));
}

TEST_CASE("alignment gradient requires projection mode") {
  Fixture f = make_fixture(FusionMode::concat, 3, 2, 4, 45);
  Gradients grads(f.store);
  CHECK_THROWS_AS(align_loss_gradient(f.store, f.cfg, f.p, Vec(3, 0.0), Vec(2, 0.0), grads),
                  ConfigError);
}

TEST_CASE("fusion backward matches finite differences in every mode") {
  SplitMix64 rng(46);
  for (FusionMode mode : {FusionMode::concat, FusionMode::shared_space, FusionMode::projection}) {
    Fixture f = make_fixture(mode, 4, 3, 5, 46);
    // bigger weights so gradients are well away from the fd noise floor
    for (std::size_t i = 0; i < f.store.count(); ++i) {
      for (double& v : f.store.value_at(i).data) v = 0.5 * rng.next_gaussian();
    }
    const Vec visual = random_vec(4, rng);
    const Vec audio = random_vec(3, rng);
    const std::size_t width = fused_dim(f.cfg, 4, 3);
    const Vec up = random_vec(width, rng);
    const double up_align = 0.37;

    auto objective = [&]() {
      const FuseResult r = fuse(f.store, f.cfg, f.p, visual, audio);
      double l = up_align * r.align_loss;
      for (std::size_t j = 0; j < width; ++j) l += up[j] * r.fused[j];
      return l;
    };

    FusionTape tape;
    fuse(f.store, f.cfg, f.p, visual, audio, &tape);
    Gradients grads(f.store);
    const FuseGrad in_grads =
        fuse_backward(f.store, f.cfg, f.p, tape, visual, audio, up, up_align, grads);

    const double step = 1e-6;
    double worst = 0.0;
    for (std::size_t g = 0; g < f.store.count(); ++g) {
      Matrix& theta = f.store.value_at(g);
      for (std::size_t k = 0; k < theta.data.size(); ++k) {
        const double saved = theta.data[k];
        theta.data[k] = saved + step;
        const double plus = objective();
        theta.data[k] = saved - step;
        const double minus = objective();
        theta.data[k] = saved;
        worst = std::max(worst, fd_err(grads.at_index(g).data[k],
                                       (plus - minus) / (2.0 * step)));
      }
    }
    auto check_input = [&](Vec& v, const Vec& analytic) {
      for (std::size_t k = 0; k < v.size(); ++k) {
        const double saved = v[k];
        v[k] = saved + step;
        const double plus = objective();
        v[k] = saved - step;
        const double minus = objective();
        v[k] = saved;
        worst = std::max(worst, fd_err(analytic[k], (plus - minus) / (2.0 * step)));
      }
    };
    check_input(const_cast<Vec&>(visual), in_grads.d_visual);
    check_input(const_cast<Vec&>(audio), in_grads.d_audio);
    CHECK(worst <= 1e-7);
  }
}

TEST_CASE("fusion rejects modality vectors that do not match the schema") {
  Fixture f = make_fixture(FusionMode::shared_space, 4, 3, 5, 47);
  CHECK_THROWS_AS(fuse(f.store, f.cfg, f.p, Vec(5, 0.0), Vec(3, 0.0)), ShapeError);
  Fixture g = make_fixture(FusionMode::projection, 4, 3, 5, 47);
  CHECK_THROWS_AS(fuse(g.store, g.cfg, g.p, Vec(4, 0.0), Vec(2, 0.0)), ShapeError);
}
