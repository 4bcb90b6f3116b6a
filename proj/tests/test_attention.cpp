#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmseq/attention.hpp"
#include "mmseq/encoder.hpp"
#include "mmseq/error.hpp"
#include "mmseq/rng.hpp"
#include "oracles/cell_reference.hpp"

using namespace mmseq;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = scale * rng.next_gaussian();
  return m;
}

struct Fixture {
  ParameterStore store;
  AttentionParams p;
};

Fixture make_fixture(std::size_t raw, std::size_t embed, std::size_t rep, std::size_t attn,
                     std::uint64_t seed) {
  Fixture f;
  f.p = add_attention_params(f.store, "attn", raw, embed, rep, attn);
  SeedStream seeds(seed);
  init_attention_params(f.store, f.p, seeds);
  return f;
}

}  // namespace

TEST_CASE("embed_frames with identity weights returns the input") {
  Fixture f = make_fixture(3, 3, 4, 4, 31);
  Matrix& w = f.store.value(f.p.w_embed);
  std::fill(w.data.begin(), w.data.end(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
  SplitMix64 rng(31);
  const Matrix raw = random_matrix(5, 3, rng);
  const Matrix out = embed_frames(f.store, f.p.w_embed, raw);
  CHECK(out.data == raw.data);
}

TEST_CASE("embed_frames shape contract and per-row oracle") {
  Fixture f = make_fixture(8, 6, 4, 4, 32);
  SplitMix64 rng(32);
  const Matrix raw = random_matrix(5, 8, rng);
  const Matrix out = embed_frames(f.store, f.p.w_embed, raw);
  CHECK(out.rows == 5);
  CHECK(out.cols == 6);
  const Matrix& w = f.store.value(f.p.w_embed);
  for (std::size_t t = 0; t < 5; ++t) {
    std::vector<double> row(raw.row(t), raw.row(t) + 8);
    const auto want = oracle::mat_times_vec(w, row);
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(out(t, j) - want[j]) <= 1e-12);
  }
  CHECK_THROWS_AS(embed_frames(f.store, f.p.w_embed, Matrix(5, 7)), ShapeError);
}

TEST_CASE("attention over identical rows is exact mean pooling") {
  Fixture f = make_fixture(4, 4, 6, 6, 33);
  SplitMix64 rng(33);
  Matrix h(5, 6);
  Vec row(6);
  for (double& v : row) v = rng.next_gaussian();
  for (std::size_t t = 0; t < 5; ++t) std::copy(row.begin(), row.end(), h.row(t));

  const AttentionResult r = attention_pool(f.store, f.p, h);
  for (double a : r.alphas) CHECK(std::abs(a - 0.2) <= 1e-15);
  const Vec means = column_means(h);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(std::abs(r.pooled[j] - means[j]) <= 1e-12);
    CHECK(std::abs(r.pooled[j] - row[j]) <= 1e-12);
  }
}

TEST_CASE("attention with a single row returns that row") {
  Fixture f = make_fixture(4, 4, 6, 6, 34);
  SplitMix64 rng(34);
  const Matrix h = random_matrix(1, 6, rng);
  const AttentionResult r = attention_pool(f.store, f.p, h);
  CHECK(r.alphas.size() == 1);
  CHECK(r.alphas[0] == 1.0);
  for (std::size_t j = 0; j < 6; ++j) CHECK(r.pooled[j] == h(0, j));
}

TEST_CASE("attention matches the hand-chained oracle on a random T=2 instance") {
  Fixture f = make_fixture(4, 4, 5, 7, 35);
  SplitMix64 rng(35);
  const Matrix h = random_matrix(2, 5, rng);
  const AttentionResult got = attention_pool(f.store, f.p, h);
  const oracle::AttentionOut want = oracle::attention_reference(
      h, f.store.value(f.p.w_score), f.store.value(f.p.b_score).data,
      f.store.value(f.p.u_ctx).data);
  for (std::size_t t = 0; t < 2; ++t) CHECK(std::abs(got.alphas[t] - want.alphas[t]) <= 1e-12);
  for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(got.pooled[j] - want.pooled[j]) <= 1e-12);
}

TEST_CASE("attention weights are positive, sum to one, and pool inside the hull") {
  Fixture f = make_fixture(4, 4, 6, 6, 36);
  SplitMix64 rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix h = random_matrix(1 + trial % 9, 6, rng, 2.0);
    const AttentionResult r = attention_pool(f.store, f.p, h);
    double sum = 0.0;
    for (double a : r.alphas) {
      CHECK(a > 0.0);
      sum += a;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t j = 0; j < 6; ++j) {
      double lo = h(0, j), hi = h(0, j);
      for (std::size_t t = 0; t < h.rows; ++t) {
        lo = std::min(lo, h(t, j));
        hi = std::max(hi, h(t, j));
      }
      CHECK(r.pooled[j] >= lo - 1e-12);
      CHECK(r.pooled[j] <= hi + 1e-12);
    }
  }
}

TEST_CASE("scaling the context vector sharpens but never re-ranks the weights") {
  Fixture f = make_fixture(4, 4, 6, 6, 37);
  SplitMix64 rng(37);
  const Matrix h = random_matrix(6, 6, rng, 2.0);
  const AttentionResult base = attention_pool(f.store, f.p, h);
  const std::size_t argmax =
      std::max_element(base.alphas.begin(), base.alphas.end()) - base.alphas.begin();

  double prev_peak = base.alphas[argmax];
  for (double scale : {2.0, 4.0, 8.0}) {
    Fixture g = make_fixture(4, 4, 6, 6, 37);
    for (std::size_t j = 0; j < 6; ++j) {
      g.store.value(g.p.u_ctx).data[j] = scale * f.store.value(f.p.u_ctx).data[j];
    }
    const AttentionResult r = attention_pool(g.store, g.p, h);
    const std::size_t am = std::max_element(r.alphas.begin(), r.alphas.end()) - r.alphas.begin();
    CHECK(am == argmax);
    CHECK(r.alphas[argmax] >= prev_peak);
    prev_peak = r.alphas[argmax];
  }
}

TEST_CASE("attention rejects empty sequences") {
  Fixture f = make_fixture(4, 4, 6, 6, 38);
  CHECK_THROWS_AS(attention_pool(f.store, f.p, Matrix(0, 6)), DataError);
}

TEST_CASE("attention and embedding gradients match finite differences") {
  Fixture f = make_fixture(5, 4, 6, 6, 39);
  SplitMix64 rng(39);
  const Matrix raw = random_matrix(4, 5, rng);
  Matrix pool_weights(1, 6);
  for (double& v : pool_weights.data) v = rng.next_gaussian();

  // objective: weigh the pooled vector after embed -> (identity encoder) pool.
  // The encoder is bypassed: attention pools the embedded rows padded to rep
  // width by a fixed linear map so the chain stays embed -> pool.
  Matrix mix(6, 4);
  for (double& v : mix.data) v = rng.next_gaussian();

  auto forward = [&](AttentionTape* tape, Matrix* embedded_out) {
    const Matrix emb = embed_frames(f.store, f.p.w_embed, raw);
    Matrix rep(emb.rows, 6);
    for (std::size_t t = 0; t < emb.rows; ++t) {
      for (std::size_t i = 0; i < 6; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 4; ++j) acc += mix(i, j) * emb(t, j);
        rep(t, i) = acc;
      }
    }
    if (embedded_out) *embedded_out = emb;
    const AttentionResult r = attention_pool(f.store, f.p, rep, tape);
    double l = 0.0;
    for (std::size_t j = 0; j < 6; ++j) l += pool_weights.data[j] * r.pooled[j];
    return l;
  };

  AttentionTape tape;
  Matrix embedded;
  forward(&tape, &embedded);
  Gradients grads(f.store);
  Vec d_pooled(pool_weights.data);
  const Matrix d_rep = attention_pool_backward(f.store, f.p, tape, d_pooled, grads);
  // push rep gradient back through mix to the embedded rows, then to W_embed
  Matrix d_emb(raw.rows, 4);
  for (std::size_t t = 0; t < raw.rows; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 6; ++i) acc += mix(i, j) * d_rep(t, i);
      d_emb(t, j) = acc;
    }
  }
  embed_frames_backward(f.store, f.p.w_embed, raw, d_emb, grads);

  const double step = 1e-6;
  double worst = 0.0;
  auto fd_err = [](double a, double n) {
    const double diff = std::abs(a - n);
    return diff <= 1e-9 ? 0.0 : diff / std::max(std::abs(n), 1e-8);
  };
  for (std::size_t g = 0; g < f.store.count(); ++g) {
    Matrix& theta = f.store.value_at(g);
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double saved = theta.data[k];
      theta.data[k] = saved + step;
      const double plus = forward(nullptr, nullptr);
      theta.data[k] = saved - step;
      const double minus = forward(nullptr, nullptr);
      theta.data[k] = saved;
      worst = std::max(worst, fd_err(grads.at_index(g).data[k],
                                     (plus - minus) / (2.0 * step)));
    }
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("laststate pooling concatenates and matches encoder boundary rows") {
  CHECK(laststate_pool({1.0}, {2.0}) == Vec{1.0, 2.0});
  CHECK(laststate_pool(Vec(4, 0.5), Vec(4, -0.5)).size() == 8);
  CHECK_THROWS_AS(laststate_pool(Vec(3, 0.0), Vec(4, 0.0)), ShapeError);

  SplitMix64 rng(40);
  ParameterStore store;
  EncoderConfig cfg;
  cfg.cell = CellKind::gru;
  cfg.hidden_dim = 3;
  cfg.num_layers = 1;
  cfg.bidirectional = true;
  EncoderParams enc = add_encoder_params(store, cfg, 2, "enc");
  for (std::size_t i = 0; i < store.count(); ++i) {
    for (double& v : store.value_at(i).data) v = 0.4 * rng.next_gaussian();
  }
  const Matrix frames = random_matrix(5, 2, rng);
  const Matrix out = encode(store, enc, frames);
  const Matrix fwd = run_direction(store, enc.layers[0].fwd, frames, Direction::forward);
  const Matrix bwd = run_direction(store, enc.layers[0].bwd, frames, Direction::backward);
  Vec fwd_last(fwd.row(4), fwd.row(4) + 3);
  Vec bwd_first(bwd.row(0), bwd.row(0) + 3);
  const Vec pooled = laststate_pool(fwd_last, bwd_first);
  // equals slicing the joined encoder output at the boundary rows
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(pooled[j] == out(4, j));
    CHECK(pooled[3 + j] == out(0, 3 + j));
  }
}

TEST_CASE("context vector initialization is never all-zero") {
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    Fixture f = make_fixture(3, 3, 4, 4, seed);
    const Vec& u = f.store.value(f.p.u_ctx).data;
    bool any = false;
    for (double v : u) any = any || v != 0.0;
    CHECK(any);
  }
}
