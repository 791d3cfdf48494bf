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
#include <span>

#include "growth/growth.hpp"
#include "nn/tensor.hpp"

namespace canopy::training {

// Sum of Huber penalties over voxels with valid[i] != 0, divided by
// `normalizer` (0 means the number of valid voxels). Invalid voxels contribute
// neither value nor gradient. Throws when no voxel is valid.
template <typename T>
nn::Tensor<T> huber_loss_masked(const nn::Tensor<T>& pred, std::span<const float> labels,
                                std::span<const std::uint8_t> valid, double delta, double normalizer = 0.0);

// Sum over pixels of (1/Y) * ||pseudo - pred|| (per-pixel series along the
// year axis of a [Y, H, W] prediction), divided by `normalizer` (0 means the
// number of pixels). pseudo holds year-major Y*H*W values and is constant.
template <typename T>
nn::Tensor<T> growth_loss(const nn::Tensor<T>& pred, std::span<const double> pseudo, growth::LossNorm norm,
                          double normalizer = 0.0);

}  // namespace canopy::training
