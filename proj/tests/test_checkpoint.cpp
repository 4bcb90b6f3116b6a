#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "mmseq/checkpoint.hpp"
#include "mmseq/error.hpp"
#include "mmseq/train.hpp"

using namespace mmseq;

TEST_CASE("checkpoint write/read roundtrip is bit-exact") {
  SplitMix64 rng(111);
  ModelConfig cfg = helpers::small_config(CellKind::lstm, true, 2, FusionMode::projection, true);
  Model m = build_model(cfg, 321);
  AdamState state(m.params);

  // a few steps so moments and parameters are non-trivial
  const auto batch = helpers::random_batch(rng, 4, 5, 5, 3, 4);
  for (int step = 0; step < 3; ++step) {
    m.grads.zero();
    compute_gradients(m, batch);
    adam_step(m.params, m.grads, state, AdamHyper{}, 0.01);
  }

  const std::string path = "/tmp/mmseq_test_ckpt.bin";
  save_checkpoint(path, m, state, state.t);
  const Checkpoint loaded = load_checkpoint(path);

  CHECK(loaded.step == state.t);
  CHECK(loaded.adam.t == state.t);
  CHECK(loaded.model.cfg.cell == cfg.cell);
  CHECK(loaded.model.cfg.hidden_dim == cfg.hidden_dim);
  CHECK(loaded.model.cfg.fusion.mode == cfg.fusion.mode);
  CHECK(loaded.model.cfg.attention == cfg.attention);
  REQUIRE(loaded.model.params.count() == m.params.count());
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    CHECK(loaded.model.params.name_at(i) == m.params.name_at(i));
    CHECK(loaded.model.params.value_at(i).data == m.params.value_at(i).data);
    CHECK(loaded.adam.m[i].data == state.m[i].data);
    CHECK(loaded.adam.n[i].data == state.n[i].data);
  }

  // the loaded model scores examples identically
  const FrameExample probe = helpers::random_example(rng, 5, 5, 3, 4, "probe");
  CHECK(score_example(m, probe) == score_example(loaded.model, probe));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint version and magic are enforced") {
  ModelConfig cfg = helpers::small_config(CellKind::gru, false, 1, FusionMode::concat, false);
  Model m = build_model(cfg, 1);
  AdamState state(m.params);
  const std::string path = "/tmp/mmseq_test_ckpt_bad.bin";
  save_checkpoint(path, m, state, 0);

  // bump the version field (bytes 8..11)
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t bad = 99;
    f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  {
    std::ofstream f(path, std::ios::binary);
    f << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  CHECK_THROWS_AS(load_checkpoint("/tmp/mmseq_missing_ckpt.bin"), DataError);
  std::remove(path.c_str());
}
