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

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nn/tensor.hpp"

namespace canopy::nn {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error, so coordinates whose true
  // derivative is ~0 compare absolutely.
  double floor = 1e-6;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t coords_per_param = 4;
  // Random unit directions over all parameters jointly.
  std::size_t projections = 8;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // e.g. "encoder.0.block.0.attn.q.weight[17]" or "projection 3"
  std::size_t checks = 0;
};

using NamedTensor = std::pair<std::string, Tensor<double>>;

// Compares backward() of `loss_fn` against central differences. `loss_fn` must
// build a fresh graph on every call and return a scalar; parameter values are
// restored exactly afterwards. Throws a numerical error on non-finite losses.
GradCheckResult grad_check(const std::function<Tensor<double>()>& loss_fn, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options = {});

}  // namespace canopy::nn
