// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace earlyact {

class Tensor;
struct TensorImpl;

using BackwardFn = std::function<void(TensorImpl&)>;

// Node of the define-by-run graph. Leaves (parameters, inputs) have no
// parents; op outputs keep handles to their parents plus a closure that
// deposits gradients into them. Data is always 64-bit: training relies on
// finite-difference checks that float32 noise would drown.
struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data iff requires_grad
  bool requires_grad = false;
  std::vector<Tensor> parents;
  BackwardFn backward;
};

// Cheap shared handle to a TensorImpl. Copying a Tensor aliases storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  size_t size() const { return impl_->data.size(); }
  int rank() const { return static_cast<int>(impl_->shape.size()); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& values() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  double* grad() { return impl_->grad.data(); }
  const double* grad() const { return impl_->grad.data(); }
  const std::vector<double>& grad_values() const { return impl_->grad; }
  void zero_grad();

  // Scalar access; throws unless the tensor holds exactly one element.
  double item() const;

  TensorImpl* impl() const { return impl_.get(); }

  static size_t numel(const std::vector<int>& shape);
  static std::string shape_str(const std::vector<int>& shape);

 private:
  friend Tensor make_node(std::vector<int>, std::vector<double>, std::vector<Tensor>, BackwardFn);
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Runs reverse-mode accumulation from a scalar loss. Gradients of every
// reachable requires_grad tensor are accumulated (+=) into their grad
// buffers; unreachable tensors are untouched, so a zeroed buffer stays
// exactly zero.
void backward(const Tensor& loss);

// Graph recording switch. Ops executed while recording is off produce plain
// value tensors with no parents, which is what inference paths use.
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Internal: assembles an op output node. Parents/backward are dropped when
// grad recording is off or no parent requires a gradient.
Tensor make_node(std::vector<int> shape, std::vector<double> data,
                 std::vector<Tensor> parents, BackwardFn backward_fn);

// Deep copy of values (fresh leaf; no graph history, gradients zeroed).
Tensor clone(const Tensor& t);

}  // namespace earlyact
