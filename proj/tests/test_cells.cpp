#include <doctest.h>

#include <cmath>

#include "mmseq/cells.hpp"
#include "mmseq/error.hpp"
#include "mmseq/rng.hpp"
#include "oracles/cell_reference.hpp"

using namespace mmseq;

namespace {

Vec random_vec(std::size_t n, SplitMix64& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.next_gaussian();
  return v;
}

void randomize(ParameterStore& store, SplitMix64& rng, double scale = 0.5) {
  for (std::size_t i = 0; i < store.count(); ++i) {
    for (double& v : store.value_at(i).data) v = scale * rng.next_gaussian();
  }
}

oracle::LstmWeights lstm_weights_of(const ParameterStore& s, const LstmParams& p) {
  oracle::LstmWeights w;
  w.w_xi = s.value(p.w_xi);
  w.w_hi = s.value(p.w_hi);
  w.w_ci = s.value(p.w_ci);
  w.w_xf = s.value(p.w_xf);
  w.w_hf = s.value(p.w_hf);
  w.w_cf = s.value(p.w_cf);
  w.w_xc = s.value(p.w_xc);
  w.w_hc = s.value(p.w_hc);
  w.w_xo = s.value(p.w_xo);
  w.w_ho = s.value(p.w_ho);
  w.w_co = s.value(p.w_co);
  w.b_i = s.value(p.b_i).data;
  w.b_f = s.value(p.b_f).data;
  w.b_c = s.value(p.b_c).data;
  w.b_o = s.value(p.b_o).data;
  return w;
}

double fd_rel_err(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-9) return 0.0;
  return diff / std::max(std::abs(numeric), 1e-8);
}

}  // namespace

TEST_CASE("lstm zero-parameter closed form") {
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 1, 1);
  LstmStepTape tape;
  const LstmStepResult r = lstm_step(store, p, {0.0}, {0.0}, {1.0}, &tape);
  CHECK(tape.gate_i[0] == 0.5);
  CHECK(tape.gate_f[0] == 0.5);
  CHECK(tape.gate_o[0] == 0.5);
  CHECK(r.c[0] == doctest::Approx(0.5).epsilon(1e-15));
  // 0.5 * tanh(0.5)
  CHECK(r.h[0] == doctest::Approx(0.23105857863000487).epsilon(1e-12));
  CHECK(r.h[0] == doctest::Approx(0.23106).epsilon(1e-4));
}

TEST_CASE("lstm shape contract") {
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 3, 5);
  const LstmStepResult r = lstm_step(store, p, Vec(3, 0.1), Vec(5, 0.0), Vec(5, 0.0));
  CHECK(r.h.size() == 5);
  CHECK(r.c.size() == 5);
  CHECK_THROWS_AS(lstm_step(store, p, Vec(4, 0.0), Vec(5, 0.0), Vec(5, 0.0)), ShapeError);
  CHECK_THROWS_AS(lstm_step(store, p, Vec(3, 0.0), Vec(4, 0.0), Vec(5, 0.0)), ShapeError);
}

TEST_CASE("lstm matches the scalar-loop oracle on random instances") {
  SplitMix64 rng(11);
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 4, 3);
  randomize(store, rng);
  const oracle::LstmWeights w = lstm_weights_of(store, p);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec x = random_vec(4, rng);
    const Vec h_prev = random_vec(3, rng);
    const Vec c_prev = random_vec(3, rng);
    LstmStepTape tape;
    const LstmStepResult got = lstm_step(store, p, x, h_prev, c_prev, &tape);
    const oracle::LstmStepOut want = oracle::lstm_step_reference(w, x, h_prev, c_prev);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(got.h[j] - want.h[j]) <= 1e-12);
      CHECK(std::abs(got.c[j] - want.c[j]) <= 1e-12);
      CHECK(tape.gate_i[j] > 0.0);
      CHECK(tape.gate_i[j] < 1.0);
      CHECK(tape.gate_f[j] > 0.0);
      CHECK(tape.gate_f[j] < 1.0);
      CHECK(tape.gate_o[j] > 0.0);
      CHECK(tape.gate_o[j] < 1.0);
      CHECK(std::abs(got.h[j]) < 1.0);
    }
  }
}

TEST_CASE("lstm tape replay reproduces the outputs bit-exactly") {
  SplitMix64 rng(12);
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 2, 4);
  randomize(store, rng);
  LstmStepTape tape;
  const LstmStepResult first =
      lstm_step(store, p, random_vec(2, rng), random_vec(4, rng), random_vec(4, rng), &tape);
  const LstmStepResult replay = lstm_step(store, p, tape.x, tape.h_prev, tape.c_prev);
  CHECK(first.h == replay.h);
  CHECK(first.c == replay.c);
}

TEST_CASE("lstm backward: zero upstream gradient gives zero gradients") {
  SplitMix64 rng(13);
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 3, 2);
  randomize(store, rng);
  LstmStepTape tape;
  lstm_step(store, p, random_vec(3, rng), random_vec(2, rng), random_vec(2, rng), &tape);
  Gradients grads(store);
  const LstmStepGrad g = lstm_backward(store, p, tape, Vec(2, 0.0), Vec(2, 0.0), grads);
  for (double v : g.dx) CHECK(v == 0.0);
  for (double v : g.dh_prev) CHECK(v == 0.0);
  for (double v : g.dc_prev) CHECK(v == 0.0);
  for (std::size_t i = 0; i < grads.count(); ++i) {
    for (double v : grads.at_index(i).data) CHECK(v == 0.0);
  }
}

TEST_CASE("lstm backward matches the symbolic derivative in one dimension") {
  // single unit, single weight active: h = sig(b_o) * tanh(c),
  // c = sig(b_f) * c_prev + sig(b_i) * tanh(w_xc * x)
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 1, 1);
  const double w = 0.7, x = 0.4, c_prev = 0.3;
  store.value(p.w_xc).data[0] = w;
  LstmStepTape tape;
  lstm_step(store, p, {x}, {0.0}, {c_prev}, &tape);
  Gradients grads(store);
  lstm_backward(store, p, tape, {1.0}, {0.0}, grads);

  const double tanh_wx = std::tanh(w * x);
  const double c = 0.5 * c_prev + 0.5 * tanh_wx;
  // dh/dw = sig(0) * (1 - tanh(c)^2) * dc/dw, dc/dw = 0.5 (1 - tanh(wx)^2) x
  const double dc_dw = 0.5 * (1.0 - tanh_wx * tanh_wx) * x;
  const double want = 0.5 * (1.0 - std::tanh(c) * std::tanh(c)) * dc_dw;
  CHECK(grads.at(p.w_xc).data[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("lstm backward matches central finite differences") {
  SplitMix64 rng(14);
  ParameterStore store;
  const LstmParams p = add_lstm_params(store, "cell", 4, 3);
  randomize(store, rng);
  const Vec x = random_vec(4, rng);
  const Vec h_prev = random_vec(3, rng);
  const Vec c_prev = random_vec(3, rng);
  const Vec wh = random_vec(3, rng);
  const Vec wc = random_vec(3, rng);

  // scalar objective L = wh . h + wc . c
  auto objective = [&]() {
    const LstmStepResult r = lstm_step(store, p, x, h_prev, c_prev);
    double l = 0.0;
    for (std::size_t j = 0; j < 3; ++j) l += wh[j] * r.h[j] + wc[j] * r.c[j];
    return l;
  };

  LstmStepTape tape;
  lstm_step(store, p, x, h_prev, c_prev, &tape);
  Gradients grads(store);
  const LstmStepGrad in_grads = lstm_backward(store, p, tape, wh, wc, grads);

  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t g = 0; g < store.count(); ++g) {
    Matrix& theta = store.value_at(g);
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double saved = theta.data[k];
      theta.data[k] = saved + step;
      const double plus = objective();
      theta.data[k] = saved - step;
      const double minus = objective();
      theta.data[k] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      worst = std::max(worst, fd_rel_err(grads.at_index(g).data[k], numeric));
    }
  }
  // input gradients through the same objective
  auto check_input = [&](Vec& v, const Vec& analytic) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double saved = v[k];
      v[k] = saved + step;
      const double plus = objective();
      v[k] = saved - step;
      const double minus = objective();
      v[k] = saved;
      worst = std::max(worst, fd_rel_err(analytic[k], (plus - minus) / (2.0 * step)));
    }
  };
  check_input(const_cast<Vec&>(x), in_grads.dx);
  check_input(const_cast<Vec&>(h_prev), in_grads.dh_prev);
  check_input(const_cast<Vec&>(c_prev), in_grads.dc_prev);
  CHECK(worst <= 1e-7);
}

TEST_CASE("gru zero-parameter symmetry") {
  ParameterStore store;
  const GruParams p = add_gru_params(store, "cell", 1, 1);
  GruStepTape tape;
  const Vec h = gru_step(store, p, {0.0}, {0.8}, &tape);
  CHECK(tape.gate_r[0] == 0.5);
  CHECK(tape.gate_z[0] == 0.5);
  CHECK(tape.cand[0] == 0.0);
  CHECK(h[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("gru update-gate saturation drives h toward the candidate") {
  ParameterStore store;
  const GruParams p = add_gru_params(store, "cell", 2, 2);
  // large positive update-gate weights against positive inputs saturate z
  for (double& v : store.value(p.w_update).data) v = 50.0;
  SplitMix64 rng(15);
  for (double& v : store.value(p.w_cand).data) v = 0.3 * rng.next_gaussian();
  const Vec x = {1.0, 0.5};
  const Vec h_prev = {0.9, 0.8};
  GruStepTape tape;
  const Vec h = gru_step(store, p, x, h_prev, &tape);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(tape.gate_z[j] > 1.0 - 1e-12);
    CHECK(std::abs(h[j] - tape.cand[j]) <= 1e-9);
  }
}

TEST_CASE("gru matches the scalar-loop oracle and stays a convex combination") {
  SplitMix64 rng(16);
  ParameterStore store;
  const GruParams p = add_gru_params(store, "cell", 4, 3);
  randomize(store, rng);
  oracle::GruWeights w;
  w.w_r = store.value(p.w_reset);
  w.w_z = store.value(p.w_update);
  w.w_c = store.value(p.w_cand);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec x = random_vec(4, rng);
    const Vec h_prev = random_vec(3, rng);
    GruStepTape tape;
    const Vec got = gru_step(store, p, x, h_prev, &tape);
    const oracle::GruStepOut want = oracle::gru_step_reference(w, x, h_prev);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(got[j] - want.h[j]) <= 1e-12);
      CHECK(tape.gate_r[j] > 0.0);
      CHECK(tape.gate_r[j] < 1.0);
      CHECK(tape.gate_z[j] > 0.0);
      CHECK(tape.gate_z[j] < 1.0);
      const double lo = std::min(h_prev[j], tape.cand[j]);
      const double hi = std::max(h_prev[j], tape.cand[j]);
      CHECK(got[j] >= lo - 1e-12);
      CHECK(got[j] <= hi + 1e-12);
    }
  }
}

TEST_CASE("gru backward matches central finite differences") {
  SplitMix64 rng(17);
  ParameterStore store;
  const GruParams p = add_gru_params(store, "cell", 4, 3);
  randomize(store, rng);
  const Vec x = random_vec(4, rng);
  const Vec h_prev = random_vec(3, rng);
  const Vec wh = random_vec(3, rng);

  auto objective = [&]() {
    const Vec h = gru_step(store, p, x, h_prev);
    double l = 0.0;
    for (std::size_t j = 0; j < 3; ++j) l += wh[j] * h[j];
    return l;
  };

  GruStepTape tape;
  gru_step(store, p, x, h_prev, &tape);
  Gradients grads(store);
  const GruStepGrad in_grads = gru_backward(store, p, tape, wh, grads);

  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t g = 0; g < store.count(); ++g) {
    Matrix& theta = store.value_at(g);
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double saved = theta.data[k];
      theta.data[k] = saved + step;
      const double plus = objective();
      theta.data[k] = saved - step;
      const double minus = objective();
      theta.data[k] = saved;
      worst = std::max(worst, fd_rel_err(grads.at_index(g).data[k],
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
      worst = std::max(worst, fd_rel_err(analytic[k], (plus - minus) / (2.0 * step)));
    }
  };
  check_input(const_cast<Vec&>(x), in_grads.dx);
  check_input(const_cast<Vec&>(h_prev), in_grads.dh_prev);
  CHECK(worst <= 1e-7);
}

TEST_CASE("gru backward rejects a tape from mismatched parameters") {
  SplitMix64 rng(18);
  ParameterStore store;
  const GruParams small = add_gru_params(store, "small", 2, 2);
  const GruParams big = add_gru_params(store, "big", 3, 4);
  randomize(store, rng);
  GruStepTape tape;
  gru_step(store, small, random_vec(2, rng), random_vec(2, rng), &tape);
  Gradients grads(store);
  CHECK_THROWS_AS(gru_backward(store, big, tape, Vec(4, 0.0), grads), ConfigError);
}

TEST_CASE("gru readout") {
  Matrix w_zero(4, 5);
  const Vec y0 = gru_readout(w_zero, Vec(5, 0.3));
  CHECK(y0.size() == 4);
  for (double v : y0) CHECK(v == 0.5);

  SplitMix64 rng(19);
  Matrix w(7, 5);
  for (double& v : w.data) v = rng.next_gaussian();
  const Vec h = random_vec(5, rng);
  const Vec y = gru_readout(w, h);
  CHECK(y.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    double pre = 0.0;
    for (std::size_t j = 0; j < 5; ++j) pre += w(i, j) * h[j];
    CHECK(std::abs(y[i] - 1.0 / (1.0 + std::exp(-pre))) <= 1e-12);
    CHECK(y[i] > 0.0);
    CHECK(y[i] < 1.0);
  }
  CHECK_THROWS_AS(gru_readout(w, Vec(6, 0.0)), ShapeError);
}

TEST_CASE("gru optional readout registers a parameter") {
  ParameterStore store;
  const GruParams p = add_gru_params(store, "cell", 3, 4, true);
  CHECK(p.has_readout);
  CHECK(store.value(p.w_readout).rows == 4);
  const GruParams q = add_gru_params(store, "plain", 3, 4);
  CHECK_FALSE(q.has_readout);
}
