// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "core/losses.hpp"
#include "core/model.hpp"
#include "gradcheck.hpp"

using namespace earlyact;
using earlyact::testing::all_grads_exactly_zero;
using earlyact::testing::any_grad_nonzero;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d_enc = 5;
  cfg.d = 8;
  cfg.n_blocks = 2;
  cfg.n_heads = 2;
  cfg.t_max = 6;
  cfg.k_classes = 3;
  cfg.predictor_hidden = 8;
  cfg.seed = 13;
  return cfg;
}

Tensor random_features(Rng& rng, int t_len, int d_enc) {
  return Tensor::randn({t_len, d_enc}, rng, 1.0);
}

void zero_all(const ModelParams& p) {
  for (Tensor t : p.all_params()) t.zero_grad();
}

std::string temp_path(const char* name) {
  return std::string("/tmp/earlyact_test_") + name + "_" + std::to_string(::getpid());
}

}  // namespace

TEST_CASE("init_params is deterministic for a fixed seed") {
  ModelConfig cfg = small_config();
  ModelParams a = init_params(cfg);
  ModelParams b = init_params(cfg);
  auto pa = a.all_params(), pb = b.all_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].values() == pb[i].values());  // bitwise
  }
}

TEST_CASE("init_params rejects indivisible head width") {
  ModelConfig cfg = small_config();
  cfg.d = 65;
  cfg.n_heads = 8;
  CHECK_THROWS_AS(init_params(cfg), ConfigError);
}

TEST_CASE("prototype bank has one row per class") {
  ModelConfig cfg = small_config();
  cfg.k_classes = 3;
  cfg.d = 4;
  cfg.n_heads = 2;
  cfg.seed = 1;
  ModelParams p = init_params(cfg);
  CHECK(p.prototypes.p.shape() == std::vector<int>{3, 4});
}

TEST_CASE("forward_full shape contract incl. T=1") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(99);

  for (int t_len : {1, 3, cfg.t_max}) {
    ForwardOutputs fo = forward_full(p, random_features(rng, t_len, cfg.d_enc));
    CHECK(fo.z_enc.shape() == std::vector<int>{t_len, cfg.d});
    CHECK(fo.z.shape() == std::vector<int>{t_len, cfg.d});
    CHECK(fo.logits.shape() == std::vector<int>{t_len, cfg.k_classes});
    CHECK(fo.s_proto.shape() == std::vector<int>{cfg.k_classes});
    CHECK(fo.s_reg.shape() == std::vector<int>{t_len, cfg.k_classes});
  }
}

TEST_CASE("forward_full rejects sequences beyond t_max") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(1);
  CHECK_THROWS_AS(forward_full(p, random_features(rng, cfg.t_max + 1, cfg.d_enc)),
                  CapacityError);
}

TEST_CASE("causality: perturbing future segments never changes past logits") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(7);
  const int t_len = 5;
  Tensor features = random_features(rng, t_len, cfg.d_enc);
  NoGradGuard no_grad;
  ForwardOutputs base = forward_full(p, features);

  for (int cut = 0; cut + 1 < t_len; ++cut) {
    Tensor perturbed = clone(features);
    for (int t = cut + 1; t < t_len; ++t)
      for (int i = 0; i < cfg.d_enc; ++i) perturbed.data()[t * cfg.d_enc + i] -= 42.5 * (i + 1);
    ForwardOutputs fo = forward_full(p, perturbed);
    for (int t = 0; t <= cut; ++t)
      for (int k = 0; k < cfg.k_classes; ++k)
        CHECK(fo.logits.data()[t * cfg.k_classes + k] ==
              base.logits.data()[t * cfg.k_classes + k]);
  }
}

TEST_CASE("gradient flow: L_proto reaches only the prototype bank") {
  ModelConfig cfg = small_config();
  cfg.seed = 13;
  ModelParams p = init_params(cfg);
  Rng rng(13);
  ForwardOutputs fo = forward_full(p, random_features(rng, 4, cfg.d_enc));

  zero_all(p);
  backward(loss_proto(fo, 1));
  CHECK(all_grads_exactly_zero(p.encoder_side_params()));
  CHECK(all_grads_exactly_zero(p.predictor_params()));
  CHECK(any_grad_nonzero({p.prototypes.p}));
}

TEST_CASE("gradient flow: prototype-mode L_reg trains predictor and decoder, not the bank") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(13);
  ForwardOutputs fo = forward_full(p, random_features(rng, 4, cfg.d_enc));

  LossConfig lc;
  lc.reg_mode = RegMode::prototypes;
  zero_all(p);
  backward(loss_reg(fo, 1, lc));
  CHECK(all_grads_exactly_zero({p.prototypes.p}));
  CHECK(any_grad_nonzero(p.predictor_params()));
  CHECK(any_grad_nonzero({p.proj.w}));  // reaches the encoder side through z
}

TEST_CASE("streaming probabilities match the batched forward per step") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(21);
  const int t_len = cfg.t_max;
  Tensor features = random_features(rng, t_len, cfg.d_enc);

  NoGradGuard no_grad;
  ForwardOutputs fo = forward_full(p, features);

  IncrementalState state;
  for (int t = 0; t < t_len; ++t) {
    std::vector<double> f(features.data() + static_cast<size_t>(t) * cfg.d_enc,
                          features.data() + static_cast<size_t>(t + 1) * cfg.d_enc);
    const std::vector<double> probs = forward_step(p, state, f);
    Tensor expected = softmax(row(fo.logits, t), 0);
    REQUIRE(probs.size() == static_cast<size_t>(cfg.k_classes));
    for (int k = 0; k < cfg.k_classes; ++k) {
      const double a = probs[k], b = expected.data()[k];
      const double rel = std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-12});
      CHECK(rel < 1e-9);
    }
  }
}

TEST_CASE("one fresh streaming step equals forward_full with T=1 exactly") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(3);
  Tensor features = random_features(rng, 1, cfg.d_enc);

  NoGradGuard no_grad;
  ForwardOutputs fo = forward_full(p, features);
  Tensor expected = softmax(row(fo.logits, 0), 0);

  IncrementalState state;
  std::vector<double> f(features.data(), features.data() + cfg.d_enc);
  const std::vector<double> probs = forward_step(p, state, f);
  for (int k = 0; k < cfg.k_classes; ++k) CHECK(probs[k] == expected.data()[k]);
}

TEST_CASE("streaming session at capacity raises a capacity error") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(5);
  IncrementalState state;
  std::vector<double> f(cfg.d_enc, 0.25);
  for (int t = 0; t < cfg.t_max; ++t) forward_step(p, state, f);
  CHECK_THROWS_AS(forward_step(p, state, f), CapacityError);
}

TEST_CASE("f32 session storage stays close to the f64 path") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  Rng rng(17);
  Tensor features = random_features(rng, 4, cfg.d_enc);

  IncrementalState s64, s32;
  s32.store_f32 = true;
  for (int t = 0; t < 4; ++t) {
    std::vector<double> f(features.data() + static_cast<size_t>(t) * cfg.d_enc,
                          features.data() + static_cast<size_t>(t + 1) * cfg.d_enc);
    const auto p64 = forward_step(p, s64, f);
    const auto p32 = forward_step(p, s32, f);
    for (int k = 0; k < cfg.k_classes; ++k) CHECK(p32[k] == doctest::Approx(p64[k]).epsilon(1e-4));
  }
}

TEST_CASE("export_embeddings writes one row per prototype and per sample") {
  ModelConfig cfg = small_config();
  cfg.k_classes = 3;
  ModelParams p = init_params(cfg);

  Dataset ds;
  ds.k_classes = 3;
  ds.d_enc = cfg.d_enc;
  Rng rng(2);
  for (int i = 0; i < 2; ++i) {
    SegmentFeatureSequence s;
    s.label = i;
    s.t_len = 3;
    s.d_enc = cfg.d_enc;
    for (int j = 0; j < 3 * cfg.d_enc; ++j) s.features.push_back(rng.normal());
    ds.samples.push_back(std::move(s));
  }

  std::ostringstream out;
  export_embeddings(p, ds, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("kind,class,dim0", 0) == 0);

  int rows = 0, proto_rows = 0;
  std::vector<std::vector<double>> proto_values;
  while (std::getline(in, line)) {
    ++rows;
    if (line.rfind("prototype,", 0) == 0) {
      ++proto_rows;
      std::vector<double> vals;
      size_t pos = line.find(',', line.find(',') + 1);  // skip kind,class
      std::string rest = line.substr(pos + 1);
      std::stringstream ss(rest);
      std::string cell;
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
      proto_values.push_back(std::move(vals));
    }
  }
  CHECK(rows == 5);        // 3 prototypes + 2 samples
  CHECK(proto_rows == 3);
  // round-trip: parsed prototype vectors reproduce the parameters
  for (int k = 0; k < 3; ++k) {
    REQUIRE(proto_values[k].size() == static_cast<size_t>(cfg.d));
    for (int i = 0; i < cfg.d; ++i) {
      CHECK(std::fabs(proto_values[k][i] - p.prototypes.p.data()[k * cfg.d + i]) <= 1e-12);
    }
  }
}

TEST_CASE("checkpoint round-trip is lossless and config errors are caught") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);
  const std::string path = temp_path("ckpt.evpc");

  save_checkpoint(p, path);
  ModelParams q = load_checkpoint(path);
  CHECK(q.cfg.d == cfg.d);
  CHECK(q.cfg.seed == cfg.seed);
  auto pa = p.all_params(), pb = q.all_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].values() == pb[i].values());

  // corrupt the magic
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);

  // truncation
  save_checkpoint(p, path);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("offset"), ParseError);
  std::remove(path.c_str());
}
