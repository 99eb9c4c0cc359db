// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "core/ops.hpp"
#include "gradcheck.hpp"

using namespace earlyact;
using earlyact::testing::check_gradients;

namespace {

MhsaParams random_mhsa(Rng& rng, int d, bool requires_grad = true) {
  auto lin = [&](int in, int out) {
    return LinearParams{Tensor::randn({in, out}, rng, 0.5, requires_grad),
                        Tensor::randn({out}, rng, 0.5, requires_grad)};
  };
  return {lin(d, d), lin(d, d), lin(d, d), lin(d, d)};
}

std::vector<Tensor> mhsa_leaves(const MhsaParams& p) {
  return {p.q.w, p.q.b, p.k.w, p.k.b, p.v.w, p.v.b, p.o.w, p.o.b};
}

// Brute-force oracle: for every t, recompute single-head attention over the
// prefix 0..t with plain loops. No shared code with causal_mhsa beyond the
// parameter tensors.
std::vector<double> prefix_attention_oracle(const Tensor& x, const MhsaParams& p) {
  const int t_len = x.shape()[0];
  const int d = x.shape()[1];
  auto apply = [&](const LinearParams& lp, const std::vector<double>& v) {
    std::vector<double> out(d, 0.0);
    for (int o = 0; o < d; ++o) {
      double acc = lp.b.data()[o];
      for (int i = 0; i < d; ++i) acc += v[i] * lp.w.data()[i * d + o];
      out[o] = acc;
    }
    return out;
  };
  std::vector<std::vector<double>> rows(t_len);
  for (int t = 0; t < t_len; ++t) {
    rows[t].assign(x.data() + static_cast<size_t>(t) * d, x.data() + static_cast<size_t>(t + 1) * d);
  }
  std::vector<double> result;
  for (int t = 0; t < t_len; ++t) {
    const std::vector<double> q = apply(p.q, rows[t]);
    std::vector<double> scores(t + 1);
    for (int j = 0; j <= t; ++j) {
      const std::vector<double> k = apply(p.k, rows[j]);
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += q[i] * k[i];
      scores[j] = dot / std::sqrt(static_cast<double>(d));
    }
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double z = 0.0;
    for (double& s : scores) {
      s = std::exp(s - mx);
      z += s;
    }
    std::vector<double> ctx(d, 0.0);
    for (int j = 0; j <= t; ++j) {
      const std::vector<double> v = apply(p.v, rows[j]);
      for (int i = 0; i < d; ++i) ctx[i] += (scores[j] / z) * v[i];
    }
    const std::vector<double> out = apply(p.o, ctx);
    result.insert(result.end(), out.begin(), out.end());
  }
  return result;
}

}  // namespace

TEST_CASE("causal_mhsa with one token reduces to plain self-attention") {
  Rng rng(1);
  const int d = 4;
  MhsaParams p = random_mhsa(rng, d, false);
  Tensor x = Tensor::randn({1, d}, rng, 1.0);
  Tensor y = causal_mhsa(x, p, 1);
  // attention over a single token has weight 1: out = o(v(x))
  Tensor expected = linear(linear(x, p.v.w, p.v.b), p.o.w, p.o.b);
  for (size_t i = 0; i < y.size(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("causal_mhsa output is bitwise invariant to future-row perturbations") {
  Rng rng(12);
  const int d = 8, t_len = 5;
  MhsaParams p = random_mhsa(rng, d, false);
  Tensor x = Tensor::randn({t_len, d}, rng, 1.0);
  Tensor base = causal_mhsa(x, p, 2);

  for (int cut = 0; cut + 1 < t_len; ++cut) {
    Tensor perturbed = clone(x);
    for (int t = cut + 1; t < t_len; ++t) {
      for (int i = 0; i < d; ++i) perturbed.data()[t * d + i] += 100.0 * (t + i + 1);
    }
    Tensor y = causal_mhsa(perturbed, p, 2);
    for (int t = 0; t <= cut; ++t) {
      for (int i = 0; i < d; ++i) {
        CHECK(y.data()[t * d + i] == base.data()[t * d + i]);  // exact equality
      }
    }
  }
}

TEST_CASE("causal_mhsa matches the per-row prefix recompute oracle") {
  Rng rng(5);
  const int d = 4, t_len = 3;
  MhsaParams p = random_mhsa(rng, d, false);
  Tensor x = Tensor::randn({t_len, d}, rng, 1.0);
  Tensor y = causal_mhsa(x, p, 1);
  const std::vector<double> expected = prefix_attention_oracle(x, p);
  REQUIRE(y.size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(expected[i]).epsilon(1e-10));
  }
}

TEST_CASE("causal_mhsa rejects head counts that do not divide the width") {
  Rng rng(8);
  MhsaParams p = random_mhsa(rng, 6, false);
  Tensor x = Tensor::randn({2, 6}, rng, 1.0);
  CHECK_THROWS_AS(causal_mhsa(x, p, 4), ConfigError);
}

TEST_CASE("causal_mhsa gradients match finite differences") {
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    const int d = 4, t_len = 3;
    MhsaParams p = random_mhsa(rng, d);
    Tensor x = Tensor::randn({t_len, d}, rng, 1.0, true);
    Tensor weights = Tensor::randn({t_len, d}, rng, 1.0);
    std::vector<Tensor> leaves = mhsa_leaves(p);
    leaves.push_back(x);
    auto r = check_gradients([&] { return sum(mul(causal_mhsa(x, p, 2), weights)); }, leaves);
    worst = std::max(worst, r.max_rel_err);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("softmax_causal_rows zeroes the strict upper triangle") {
  Rng rng(3);
  Tensor s = Tensor::randn({4, 4}, rng, 2.0);
  Tensor a = softmax_causal_rows(s);
  for (int t = 0; t < 4; ++t) {
    double rowsum = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j > t) CHECK(a.data()[t * 4 + j] == 0.0);
      rowsum += a.data()[t * 4 + j];
    }
    CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
  }
}
