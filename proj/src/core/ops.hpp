// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tensor.hpp"

namespace earlyact {

// Elementwise; shapes must match exactly (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// y = x W + b. x may be rank-1 [In] or rank-2 [R, In]; the leading extent is
// preserved. b may be undefined (Tensor{}) to skip the bias.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor row(const Tensor& x, int r);                       // [R,C] -> [C]
Tensor slice_rows(const Tensor& x, int r0, int r1);       // [R,C] -> [r1-r0,C]
Tensor slice_cols(const Tensor& x, int c0, int c1);       // [R,C] -> [R,c1-c0]
Tensor concat_cols(const std::vector<Tensor>& parts);     // [R,Ci] -> [R,sum Ci]
Tensor element(const Tensor& x, size_t flat_index);       // -> scalar

Tensor sum(const Tensor& x);                              // -> scalar
Tensor mean_all(const Tensor& x);                         // -> scalar
Tensor mean_of(const std::vector<Tensor>& scalars);       // -> scalar

// Stable softmax (max subtraction) along `axis`; rejects non-finite input.
Tensor softmax(const Tensor& x, int axis);

// Row-wise softmax of a [T,T] score matrix where row t only sees columns
// 0..t. Columns beyond t are exactly zero in the output and receive no
// gradient, which makes causality exact by construction.
Tensor softmax_causal_rows(const Tensor& scores);

// Normalizes over the last axis; epsilon 1e-5 inside the square root.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);

Tensor gelu(const Tensor& x);  // exact erf form

// out[.., k] = -||b[k] - a[..]||_2 (plain Euclidean norm, not squared).
// a: [D] or [N,D]; b: [K,D]. The gradient at a zero-distance pair is
// defined as zero.
Tensor neg_l2_scores(const Tensor& a, const Tensor& b);

// Smoothed cross-entropy against target (1-eps)*onehot + eps/K, computed
// with log-sum-exp stabilization. logits: [K] or [N,K]; rank-2 input is
// averaged over rows. Returns a scalar.
Tensor cross_entropy_smoothed(const Tensor& logits, int target_class, double epsilon);

// Mean over all elements of (a-b)^2.
Tensor mse(const Tensor& a, const Tensor& b);

// Forward identity; backward deposits nothing into x.
Tensor stop_grad(const Tensor& x);

struct LinearParams {
  Tensor w;
  Tensor b;
};

struct MhsaParams {
  LinearParams q, k, v, o;
};

// Masked multi-head self-attention over x [T,D]. Output row t depends only
// on rows 0..t. Scale is 1/sqrt(D/n_heads). D must divide by n_heads.
Tensor causal_mhsa(const Tensor& x, const MhsaParams& p, int n_heads);

}  // namespace earlyact
