// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace earlyact {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

size_t Tensor::numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= static_cast<size_t>(e);
  }
  return n;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(numel(shape), 0.0);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

void Tensor::zero_grad() {
  if (impl_ && impl_->requires_grad) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

double Tensor::item() const {
  if (!impl_ || impl_->data.size() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " +
                     (impl_ ? shape_str(impl_->shape) : std::string("<null>")));
  }
  return impl_->data[0];
}

Tensor make_node(std::vector<int> shape, std::vector<double> data,
                 std::vector<Tensor> parents, BackwardFn backward_fn) {
  auto impl = std::make_shared<TensorImpl>();
  if (Tensor::numel(shape) != data.size()) {
    throw ShapeError("op produced " + std::to_string(data.size()) +
                     " values for shape " + Tensor::shape_str(shape));
  }
  impl->shape = std::move(shape);
  impl->data = std::move(data);

  bool track = g_grad_enabled;
  if (track) {
    bool any = false;
    for (const Tensor& p : parents) any = any || (p.defined() && p.requires_grad());
    track = any;
  }
  if (track) {
    impl->requires_grad = true;
    impl->grad.assign(impl->data.size(), 0.0);
    impl->parents = std::move(parents);
    impl->backward = std::move(backward_fn);
  }
  return Tensor(std::move(impl));
}

Tensor clone(const Tensor& t) {
  return Tensor::from(t.shape(), t.values(), t.requires_grad());
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward requires a scalar loss");
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order over the parent DAG.
  std::vector<TensorImpl*> topo;
  std::unordered_set<TensorImpl*> seen;
  struct Frame {
    TensorImpl* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.impl(), 0});
  seen.insert(loss.impl());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorImpl* p = f.node->parents[f.next_parent++].impl();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.impl()->grad[0] += 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace earlyact
