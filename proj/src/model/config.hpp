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

#include <array>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace canopy::model {

struct ModelConfig {
  std::size_t channels = 18;
  std::size_t timesteps = 84;
  std::size_t height = 96;
  std::size_t width = 96;
  std::size_t years = 7;
  std::size_t embed_dim = 72;
  std::array<std::size_t, 4> depths_enc{6, 4, 4, 6};
  // Indexed from the lowest level upwards, like the decoder layers.
  std::array<std::size_t, 4> depths_dec{4, 6, 8, 16};
  std::array<std::size_t, 4> heads{4, 8, 12, 24};
  std::size_t window_t = 2;
  std::size_t window_s = 6;
  std::array<std::size_t, 3> reduce_time{28, 14, 7};
  std::size_t ffn_ratio = 4;
  std::size_t norm_groups = 8;
  // Head outputs are multiplied by this factor, so unit-scale activations map
  // to heights in meters.
  double output_scale = 1.0;

  void validate() const;

  // Embedding width at level l (0 = full resolution).
  std::size_t dim(std::size_t level) const { return embed_dim << level; }
  std::size_t rows(std::size_t level) const { return height >> level; }
  std::size_t cols(std::size_t level) const { return width >> level; }
  // Encoder timesteps at level l.
  std::size_t enc_time(std::size_t level) const { return level == 0 ? timesteps : reduce_time[level - 1]; }

  static ModelConfig full_scale();
  static ModelConfig desk_scale();
  // Smallest config that still pads, shifts and masks at the top level; used
  // for 64-bit gradient checks.
  static ModelConfig tiny_scale();
};

// Unknown keys are rejected; missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& cfg);

}  // namespace canopy::model
