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

#pragma once

#include <string>
#include <vector>

#include "common/error.hpp"
#include "nn/tensor.hpp"

namespace canopy::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  // Biases, norm affines and position-bias tables are exempt from weight decay.
  bool decay = true;

  bool frozen() const { return !tensor.requires_grad(); }
};

// Ordered, name-addressed collection of trainable tensors. Registration order
// is the canonical order for checkpoints, checksums and optimizer state.
template <typename T>
class ParameterStore {
 public:
  Tensor<T> add(std::string name, Shape shape, std::vector<T> values, bool decay = true) {
    for (const auto& p : params_) require(p.name != name, "duplicate parameter name ", name);
    auto t = Tensor<T>::from_vector(std::move(shape), std::move(values), true);
    params_.push_back({std::move(name), t, decay});
    return t;
  }

  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  const Parameter<T>* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  // Freezes every parameter whose name does not start with one of `prefixes`.
  void freeze_all_except(const std::vector<std::string>& prefixes) {
    for (auto& p : params_) {
      bool keep = false;
      for (const auto& pre : prefixes) keep = keep || p.name.rfind(pre, 0) == 0;
      p.tensor.set_requires_grad(keep);
    }
  }

  void unfreeze_all() {
    for (auto& p : params_) p.tensor.set_requires_grad(true);
  }

 private:
  std::vector<Parameter<T>> params_;
};

}  // namespace canopy::nn
