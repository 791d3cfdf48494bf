/*
 * Copyright (c) 2026, The canopy authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense row-major tensors with tape-free reverse-mode differentiation.
//
// Every differentiable op returns a Tensor whose node keeps its parents alive
// and a closure that pushes the node's gradient into them. backward() walks
// the resulting DAG in reverse topological order. Graphs are freed when the
// last Tensor referencing them goes away; parameters never reference their
// consumers, so there are no ownership cycles.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace canopy::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(std::span<const T>)> backward;

  T* ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  // Writable access is meant for leaves (parameters, inputs); mutating an
  // interior node invalidates the gradients of its consumers.
  std::span<T> mutable_values() { return node_->value; }
  const T* data() const { return node_->value.data(); }

  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  T* grad_accumulator() const { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  T item() const;

  // Installs the backward closure of a freshly created op result.
  void set_backward(std::function<void(std::span<const T>)> fn) { node_->backward = std::move(fn); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Result node for an op over `inputs`. It records the inputs as parents and
// requires a gradient iff gradient recording is on and any input requires one.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::initializer_list<const Tensor<T>*> inputs);

// Accumulates d(loss)/d(leaf) into every reachable node requiring a gradient.
// The root must hold a single element.
template <typename T>
void backward(const Tensor<T>& loss);

// Thread-local switch; while disabled, ops build no graph.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace canopy::nn
