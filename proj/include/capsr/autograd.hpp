// Copyright (c) 2026 The capsr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file autograd.hpp
 * @brief Reverse-mode differentiation over Tensor4 values.
 *
 * Every differentiable op produces a Var whose node remembers its inputs and
 * a closure that pushes the node's gradient back into them. Leaves (model
 * parameters, inputs under test) accumulate gradients across backward calls;
 * interior nodes are reset at the start of each call, so running backward
 * twice on the same graph exactly doubles every leaf gradient.
 */

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "capsr/tensor.hpp"

namespace capsr {

namespace detail {
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
struct Node {
  Tensor4<T> value;
  Tensor4<T> grad;  // unpopulated until something flows into it
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  /// Gradient buffer of this node, zero-allocated on first use.
  Tensor4<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor4<T>(value.shape());
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;

  /// Trainable (or inspected) leaf.
  static Var leaf(Tensor4<T> value, bool requires_grad = true) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
  }
  static Var constant(Tensor4<T> value) { return leaf(std::move(value), false); }

  /// Interior node produced by an op. `inputs` are kept only when at least
  /// one of them takes part in differentiation.
  static Var op(Tensor4<T> value, std::vector<Var> inputs, std::function<void(Node<T>&)> bw) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->is_leaf = false;
    if (detail::grad_mode()) {
      for (const auto& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
    }
    if (node->requires_grad) {
      node->inputs.reserve(inputs.size());
      for (auto& in : inputs) node->inputs.push_back(in.node_);
      node->backward = std::move(bw);
    }
    return Var(std::move(node));
  }

  [[nodiscard]] bool defined() const { return static_cast<bool>(node_); }
  [[nodiscard]] const Tensor4<T>& value() const { return node_->value; }
  /// Direct write access, meant for optimizer updates on leaves.
  [[nodiscard]] Tensor4<T>& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape4& shape() const { return node_->value.shape(); }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }
  [[nodiscard]] const Tensor4<T>& grad() const { return node_->grad; }
  [[nodiscard]] Tensor4<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor4<T>(); }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  [[nodiscard]] T item() const { return node_->value.item(); }

  [[nodiscard]] Node<T>* node() const { return node_.get(); }

 private:
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<T>> node_;
};

/// Runs reverse-mode accumulation from a scalar loss.
template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.defined() || !loss.shape().is_scalar()) {
    throw UsageError("backward requires a scalar loss, got " +
                     (loss.defined() ? loss.shape().str() : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->is_leaf) n->grad = Tensor4<T>();
  }
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->is_leaf || n->grad.empty() || !n->backward) continue;
    n->backward(*n);
  }
}

}  // namespace capsr
