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

// Finite-difference checks of whole models in 64-bit precision.

#pragma once

#include <cstdint>

#include "model/swin_unet.hpp"
#include "nn/gradcheck.hpp"

namespace canopy::model {

// The prediction head's ReLUs make the loss only piecewise smooth; a step of
// 1e-5 crosses kinks often enough to matter on models with ~10^4 units.
// The larger floor absorbs rounding noise of the smaller step.
inline nn::GradCheckOptions model_grad_check_options() {
  nn::GradCheckOptions o;
  o.step = 1e-6;
  o.floor = 1e-4;
  o.coords_per_param = 2;
  o.projections = 8;
  return o;
}

// Contracts both heads with fixed random weights and checks the gradient of
// every parameter of `m`.
nn::GradCheckResult model_grad_check(TemporalSwinUnet<double>& m, const nn::GradCheckOptions& options);

// Builds a model from `cfg` (seeded by options.seed) and checks it.
nn::GradCheckResult model_grad_check(const ModelConfig& cfg, const nn::GradCheckOptions& options);

// A single linear layer with a squared loss; the checker's own floor.
nn::GradCheckResult linear_grad_check(const nn::GradCheckOptions& options);

}  // namespace canopy::model
