// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "core/ops.hpp"
#include "gradcheck.hpp"

using namespace earlyact;
using earlyact::testing::check_gradients;

namespace {

Tensor randt(std::vector<int> shape, Rng& rng, bool requires_grad = true, double stddev = 1.0) {
  return Tensor::randn(std::move(shape), rng, stddev, requires_grad);
}

}  // namespace

TEST_CASE("linear identity and sum cases") {
  Tensor x = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor w = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::zeros({2});
  Tensor y = linear(x, w, b);
  CHECK(y.values() == std::vector<double>{1, 0, 0, 1});

  Tensor x2 = Tensor::from({1, 2}, {2, 3});
  Tensor w2 = Tensor::from({2, 1}, {1, 1});
  Tensor b2 = Tensor::from({1}, {1});
  CHECK(linear(x2, w2, b2).values() == std::vector<double>{6});
}

TEST_CASE("linear rejects mismatched shapes naming both") {
  Tensor x = Tensor::from({3, 4}, std::vector<double>(12, 1.0));
  Tensor w = Tensor::from({5, 2}, std::vector<double>(10, 1.0));
  CHECK_THROWS_WITH_AS(linear(x, w, Tensor{}), doctest::Contains("[5x2]"), ShapeError);
  CHECK_THROWS_WITH_AS(linear(x, w, Tensor{}), doctest::Contains("[3x4]"), ShapeError);
}

TEST_CASE("linear gradient matches central finite differences") {
  Rng rng(7);
  Tensor x = randt({3, 4}, rng);
  Tensor w = randt({4, 2}, rng);
  Tensor b = randt({2}, rng);
  auto r = check_gradients([&] { return sum(linear(x, w, b)); }, {x, w, b});
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("softmax symmetry and stability") {
  Tensor u = softmax(Tensor::from({3}, {0, 0, 0}), 0);
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor s = softmax(Tensor::from({2}, {1000, 0}), 0);
  CHECK(s.data()[0] == doctest::Approx(1.0));
  CHECK(s.data()[1] < 1e-300);
  CHECK(std::isfinite(s.data()[0]));
}

TEST_CASE("softmax rejects non-finite input") {
  Tensor bad = Tensor::from({2}, {1.0, std::nan("")});
  CHECK_THROWS_AS(softmax(bad, 0), NumericError);
}

TEST_CASE("softmax Jacobian matches finite differences") {
  Rng rng(3);
  Tensor x = randt({5}, rng);
  for (int j = 0; j < 5; ++j) {
    auto r = check_gradients([&] { return element(softmax(x, 0), j); }, {x});
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_CASE("softmax rows sum to one and stay finite up to 1e6 magnitudes") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor x = Tensor::zeros({4, 7});
    for (double& v : x.values()) v = (rng.uniform() * 2 - 1) * 1e6;
    Tensor y = softmax(x, 1);
    for (int r = 0; r < 4; ++r) {
      double s = 0;
      for (int c = 0; c < 7; ++c) {
        const double v = y.data()[r * 7 + c];
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("softmax over a non-trailing axis") {
  Tensor x = Tensor::from({2, 2}, {0, 10, 0, 10});
  Tensor y = softmax(x, 0);  // columns
  CHECK(y.data()[0] == doctest::Approx(0.5));
  CHECK(y.data()[2] == doctest::Approx(0.5));
  CHECK(y.data()[1] == doctest::Approx(0.5));
}

TEST_CASE("layer_norm handles constant slices via epsilon") {
  Tensor x = Tensor::from({3}, {5, 5, 5});
  Tensor gamma = Tensor::full({3}, 1.0);
  Tensor beta = Tensor::zeros({3});
  Tensor y = layer_norm(x, gamma, beta);
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("layer_norm keeps an already-normalized slice up to epsilon scaling") {
  Tensor x = Tensor::from({2}, {1, -1});
  Tensor gamma = Tensor::full({2}, 1.0);
  Tensor beta = Tensor::zeros({2});
  Tensor y = layer_norm(x, gamma, beta);
  CHECK(y.data()[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(y.data()[1] == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("layer_norm gradient matches finite differences") {
  Rng rng(11);
  Tensor x = randt({2, 8}, rng);
  Tensor gamma = randt({8}, rng);
  Tensor beta = randt({8}, rng);
  Tensor weights = randt({2, 8}, rng, false);  // fixed projection, not a leaf
  auto r = check_gradients([&] { return sum(mul(layer_norm(x, gamma, beta), weights)); },
                           {x, gamma, beta});
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("neg_l2_scores zero distance and 3-4-5 triangle") {
  Tensor b = Tensor::from({2, 2}, {3, 4, 0, 1});
  Tensor a = Tensor::from({2}, {0, 0});
  Tensor s = neg_l2_scores(a, b);
  CHECK(s.data()[0] == doctest::Approx(-5.0));
  CHECK(s.data()[1] == doctest::Approx(-1.0));

  Tensor a2 = Tensor::from({2}, {3, 4});  // equals b[0]
  Tensor s2 = neg_l2_scores(a2, b);
  CHECK(s2.data()[0] == 0.0);
  CHECK(s2.data()[0] > s2.data()[1]);  // zero distance is the strict max
}

TEST_CASE("neg_l2_scores gradient matches finite differences away from zero distance") {
  Rng rng(9);
  Tensor a = randt({3, 6}, rng);
  Tensor b = randt({4, 6}, rng);
  auto r = check_gradients([&] { return sum(neg_l2_scores(a, b)); }, {a, b});
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("neg_l2_scores pins the zero-distance gradient to zero") {
  Tensor a = Tensor::from({2}, {1, 2}, true);
  Tensor b = Tensor::from({1, 2}, {1, 2}, true);
  Tensor s = sum(neg_l2_scores(a, b));
  backward(s);
  CHECK(earlyact::testing::all_grads_exactly_zero({a, b}));
}

TEST_CASE("cross_entropy_smoothed trivial values") {
  Tensor uniform = Tensor::zeros({4});
  CHECK(cross_entropy_smoothed(uniform, 2, 0.0).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Tensor confident = Tensor::from({4}, {0, 0, 1e6, 0});
  CHECK(cross_entropy_smoothed(confident, 2, 0.0).item() == doctest::Approx(0.0));
}

TEST_CASE("cross_entropy_smoothed validates target and epsilon") {
  Tensor logits = Tensor::zeros({4});
  CHECK_THROWS_AS(cross_entropy_smoothed(logits, 4, 0.0), IndexError);
  CHECK_THROWS_AS(cross_entropy_smoothed(logits, -1, 0.0), IndexError);
  CHECK_THROWS_AS(cross_entropy_smoothed(logits, 0, 1.0), ConfigError);
}

TEST_CASE("cross_entropy_smoothed gradient matches finite differences") {
  Rng rng(2);
  Tensor logits = randt({5}, rng);
  auto r = check_gradients([&] { return cross_entropy_smoothed(logits, 3, 0.1); }, {logits});
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("cross_entropy_smoothed over rank-2 logits averages the rows") {
  Rng rng(6);
  Tensor logits = randt({3, 4}, rng, false);
  double manual = 0.0;
  for (int t = 0; t < 3; ++t) manual += cross_entropy_smoothed(row(logits, t), 1, 0.05).item();
  manual /= 3.0;
  CHECK(cross_entropy_smoothed(logits, 1, 0.05).item() == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("stop_grad blocks every path to a leaf") {
  Rng rng(4);
  Tensor a = randt({3}, rng);
  Tensor b = randt({3}, rng);
  Tensor loss = sum(mul(stop_grad(a), b));
  backward(loss);
  CHECK(earlyact::testing::all_grads_exactly_zero({a}));
  CHECK(earlyact::testing::any_grad_nonzero({b}));
  // forward value identical to inner
  CHECK(stop_grad(a).values() == a.values());
}

TEST_CASE("every primitive passes finite-difference checks over 10 seeds") {
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Tensor a = randt({3, 4}, rng);
    Tensor b = randt({3, 4}, rng);
    Tensor m = randt({4, 3}, rng);
    Tensor g = randt({4}, rng);
    Tensor h = randt({4}, rng);
    Tensor p = randt({2, 4}, rng);

    const std::vector<std::pair<std::function<Tensor()>, std::vector<Tensor>>> cases = {
        {[&] { return sum(add(a, b)); }, {a, b}},
        {[&] { return sum(sub(a, b)); }, {a, b}},
        {[&] { return sum(mul(a, b)); }, {a, b}},
        {[&] { return sum(scale(a, -1.7)); }, {a}},
        {[&] { return sum(matmul(a, m)); }, {a, m}},
        {[&] { return sum(transpose(a)); }, {a}},
        {[&] { return sum(linear(a, m, Tensor{})); }, {a, m}},
        {[&] { return sum(row(a, 1)); }, {a}},
        {[&] { return sum(slice_rows(a, 1, 3)); }, {a}},
        {[&] { return sum(slice_cols(a, 1, 3)); }, {a}},
        {[&] { return sum(concat_cols({a, b})); }, {a, b}},
        {[&] { return element(a, 5); }, {a}},
        {[&] { return mean_all(a); }, {a}},
        {[&] { return mean_of({element(a, 0), element(b, 1)}); }, {a, b}},
        {[&] { return sum(softmax(a, 1)); }, {a}},
        {[&] { return element(softmax(a, 1), 2); }, {a}},
        {[&] { return element(softmax(a, 0), 7); }, {a}},
        {[&] { return sum(layer_norm(a, g, h)); }, {a, g, h}},
        {[&] { return sum(gelu(a)); }, {a}},
        {[&] { return sum(neg_l2_scores(a, p)); }, {a, p}},
        {[&] { return cross_entropy_smoothed(row(a, 0), 2, 0.1); }, {a}},
        {[&] { return mse(a, b); }, {a, b}},
    };
    for (const auto& [build, leaves] : cases) {
      const auto r = check_gradients(build, leaves);
      worst = std::max(worst, r.max_rel_err);
    }
  }
  CHECK(worst < 1e-4);
}
