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

#include <cstddef>
#include <vector>

#include "common/container.hpp"
#include "nn/parameters.hpp"
#include "training/phase_config.hpp"

namespace canopy::training {

// Euclidean norm over the gradients of all unfrozen parameters. Throws a
// numerical error naming the first parameter with a non-finite gradient.
double global_grad_norm(const nn::ParameterStore<float>& store);

// Scales every gradient by bound / norm when the global norm exceeds bound.
// Returns the norm before clipping.
double clip_gradients(nn::ParameterStore<float>& store, double bound);

// Adaptive moments with decoupled weight decay. Frozen parameters are skipped
// entirely, so their values and moments never change.
class AdamW {
 public:
  AdamW(const nn::ParameterStore<float>& store, const PhaseConfig& cfg);

  void step(nn::ParameterStore<float>& store, double lr);
  std::size_t steps_taken() const { return t_; }

  void save(Container& c) const;
  void restore(const Container& c);

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace canopy::training
