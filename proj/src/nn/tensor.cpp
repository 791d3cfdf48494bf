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

#include "nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "common/error.hpp"

namespace canopy::nn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool on) { g_grad_enabled = on; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(Shape shape, std::vector<T> values, bool requires_grad) {
  require(shape_numel(shape) == values.size(), "tensor data has ", values.size(),
          " elements but shape ", shape_str(shape), " needs ", shape_numel(shape));
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{}, value, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  require(numel() == 1, "item() on tensor of shape ", shape_str(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::initializer_list<const Tensor<T>*> inputs) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (GradMode::enabled()) {
    for (const auto* in : inputs) {
      if (in && in->defined() && in->requires_grad()) {
        node->requires_grad = true;
        node->parents.push_back(in->node());
      }
    }
  }
  return Tensor<T>(node);
}

template <typename T>
void backward(const Tensor<T>& loss) {
  require(loss.defined() && loss.numel() == 1, "backward() needs a scalar root");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed post-order is a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(node->grad);
  }
  // Interior gradients are no longer needed; leaves keep theirs.
  for (Node<T>* node : order)
    if (node->backward) std::vector<T>().swap(node->grad);
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::initializer_list<const Tensor<float>*>);
template Tensor<double> make_result(Shape, std::vector<double>, std::initializer_list<const Tensor<double>*>);
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace canopy::nn
