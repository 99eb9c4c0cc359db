// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "core/dataio.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

using namespace earlyact;

namespace {

// Published accuracy rows reproduced by the trapezoid rule; the AUC values
// are the ones reported alongside them.
const std::vector<double> kSsv2Rho{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
const std::vector<double> kSsv2Acc{22.73, 27.81, 33.62, 40.52, 47.95,
                                   53.94, 58.54, 61.49, 63.03, 63.56};
const std::vector<double> kEk55Rho{0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
const std::vector<double> kEk55Acc{25.12, 28.11, 30.36, 32.1, 33.93, 35.25, 35.71, 36.34};
const std::vector<double> kUcfRho{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
const std::vector<double> kUcfAcc{92.15, 93.97, 95.03, 95.3, 95.75,
                                  95.88, 96.35, 96.33, 96.54, 96.64};

Dataset random_label_dataset(int n, int t_len, int d_enc, int k, uint64_t seed) {
  // labels independent of features: any fixed classifier scores 1/k
  Rng rng(seed);
  Dataset ds;
  ds.k_classes = k;
  ds.d_enc = d_enc;
  for (int i = 0; i < n; ++i) {
    SegmentFeatureSequence s;
    s.label = static_cast<int>(rng.uniform_index(k));
    s.t_len = t_len;
    s.d_enc = d_enc;
    for (int j = 0; j < t_len * d_enc; ++j) s.features.push_back(rng.normal());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

TEST_CASE("auc reproduces the published table values to within 0.01") {
  CHECK(std::fabs(auc({kSsv2Rho, kSsv2Acc}) - 43.00) <= 0.01);
  CHECK(std::fabs(auc({kEk55Rho, kEk55Acc}) - 28.27) <= 0.01);
  CHECK(std::fabs(auc({kUcfRho, kUcfAcc}) - 85.95) <= 0.01);
}

TEST_CASE("auc of a constant curve over [0.1, 1.0] is 0.9 times the constant") {
  AccuracyCurve curve;
  for (int i = 1; i <= 10; ++i) {
    curve.ratios.push_back(i / 10.0);
    curve.top1.push_back(0.73);
  }
  CHECK(auc(curve) == doctest::Approx(0.9 * 0.73).epsilon(1e-12));
}

TEST_CASE("auc validates its input") {
  CHECK_THROWS_AS(auc({{0.5}, {1.0}}), ConfigError);
  CHECK_THROWS_AS(auc({{0.5, 0.5}, {1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(auc({{0.5, 0.4}, {1.0, 1.0}}), ConfigError);
}

TEST_CASE("auc is monotone under pointwise domination") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    AccuracyCurve low, high;
    double rho = 0.0;
    for (int i = 0; i < 8; ++i) {
      rho += 0.05 + rng.uniform() * 0.1;
      const double a = rng.uniform();
      low.ratios.push_back(rho);
      low.top1.push_back(a);
      high.ratios.push_back(rho);
      high.top1.push_back(a + rng.uniform() * (1.0 - a));
    }
    CHECK(auc(high) >= auc(low));
  }
}

TEST_CASE("auc is invariant to inserting a collinear midpoint") {
  AccuracyCurve curve{{0.2, 0.6, 1.0}, {0.1, 0.5, 0.7}};
  const double base = auc(curve);
  AccuracyCurve split{{0.2, 0.4, 0.6, 1.0}, {0.1, 0.3, 0.5, 0.7}};  // midpoint of first span
  CHECK(auc(split) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("eval_curve on label-free data scores 1/K at every ratio") {
  ModelConfig cfg;
  cfg.d_enc = 6;
  cfg.d = 8;
  cfg.n_blocks = 1;
  cfg.n_heads = 2;
  cfg.t_max = 4;
  cfg.k_classes = 6;
  cfg.predictor_hidden = 8;
  cfg.seed = 77;
  ModelParams params = init_params(cfg);

  const int n = 1200;
  Dataset ds = random_label_dataset(n, 4, cfg.d_enc, cfg.k_classes, 123);
  AccuracyCurve curve = eval_curve(params, ds);
  REQUIRE(curve.ratios.size() == 4);
  const double p = 1.0 / cfg.k_classes;
  const double ci = 4.0 * std::sqrt(p * (1 - p) / n);  // 4-sigma binomial band
  for (double acc : curve.top1) {
    CHECK(std::fabs(acc - p) <= ci);
  }
  CHECK(curve.ratios[0] == doctest::Approx(0.25));
  CHECK(curve.ratios[3] == doctest::Approx(1.0));
}

TEST_CASE("eval_curve on paired-ambiguity data cannot beat the 50% prefix ceiling") {
  SynthSpec spec;
  spec.k_classes = 4;
  spec.t_segments = 6;
  spec.d_enc = 6;
  spec.noise_sigma = 0.0;
  spec.ambiguity_depth = 3;
  spec.n_train = 0 + 200;
  spec.n_val = 200;
  spec.seed = 9;
  SynthData data = gen_synthetic(spec);

  ModelConfig cfg;
  cfg.d_enc = spec.d_enc;
  cfg.d = 8;
  cfg.n_blocks = 1;
  cfg.n_heads = 2;
  cfg.t_max = spec.t_segments;
  cfg.k_classes = spec.k_classes;
  cfg.predictor_hidden = 8;
  cfg.seed = 5;
  ModelParams params = init_params(cfg);

  AccuracyCurve curve = eval_curve(params, data.val);
  const double ci = 3.0 * std::sqrt(0.25 / static_cast<double>(data.val.samples.size()));
  for (int t = 0; t < spec.ambiguity_depth; ++t) {
    CHECK(curve.top1[t] <= 0.5 + ci);
  }
}

TEST_CASE("eval_curve rejects mixed sequence lengths and mismatched widths") {
  ModelConfig cfg;
  cfg.d_enc = 4;
  cfg.d = 8;
  cfg.n_blocks = 1;
  cfg.n_heads = 2;
  cfg.t_max = 4;
  cfg.k_classes = 2;
  cfg.predictor_hidden = 4;
  ModelParams params = init_params(cfg);

  Dataset mixed = random_label_dataset(1, 2, 4, 2, 1);
  Dataset extra = random_label_dataset(1, 3, 4, 2, 2);
  mixed.samples.push_back(extra.samples[0]);
  CHECK_THROWS_AS(eval_curve(params, mixed), ConfigError);

  Dataset narrow = random_label_dataset(2, 2, 3, 2, 3);
  CHECK_THROWS_AS(eval_curve(params, narrow), ConfigError);
}

TEST_CASE("metrics CSV writes the curve plus a trailing auc row and reads back") {
  AccuracyCurve curve{{0.25, 0.5, 0.75, 1.0}, {0.41, 0.55, 0.62, 0.8}};
  const std::string path = "/tmp/earlyact_test_metrics_" + std::to_string(::getpid()) + ".csv";
  write_metrics_csv_file(curve, path);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "rho,top1");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    last = line;
    ++rows;
  }
  CHECK(rows == 5);
  CHECK(last.rfind("auc,", 0) == 0);

  AccuracyCurve back = read_curve_csv(path);
  REQUIRE(back.ratios.size() == curve.ratios.size());
  for (size_t i = 0; i < curve.ratios.size(); ++i) {
    CHECK(back.ratios[i] == doctest::Approx(curve.ratios[i]).epsilon(1e-9));
    CHECK(back.top1[i] == doctest::Approx(curve.top1[i]).epsilon(1e-9));
  }
  CHECK(auc(back) == doctest::Approx(auc(curve)).epsilon(1e-9));
  std::remove(path.c_str());
}
