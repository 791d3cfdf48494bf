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
#include <string>

#include "json.hpp"

namespace canopy::training {

enum class Phase { kPretrain, kFinetune };

std::string phase_name(Phase phase);

struct PhaseConfig {
  Phase phase = Phase::kPretrain;
  double max_lr = 1e-4;
  double warmup_fraction = 0.30;
  std::size_t total_steps = 1000;
  std::size_t batch_size = 16;
  double grad_clip = 1.0;
  double huber_delta = 1.0;  // m, pretraining only
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Write a checkpoint every this many steps; 0 writes only the final one.
  std::size_t checkpoint_every = 0;

  void validate() const;

  static PhaseConfig pretrain_defaults();
  static PhaseConfig finetune_defaults();
};

// Missing keys take the defaults of the phase named by "phase" (required);
// unknown keys are rejected.
PhaseConfig phase_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PhaseConfig& cfg);

// Linear warmup from 0 over the first warmup_fraction of the steps, then
// cosine decay to 0 at total_steps.
double lr_at(std::size_t step, const PhaseConfig& cfg);

}  // namespace canopy::training
