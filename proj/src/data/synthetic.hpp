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

// Synthetic forest patches with known height trajectories, for end-to-end
// runs without satellite archives.

#pragma once

#include <cstdint>
#include <filesystem>

#include "common/container.hpp"
#include "common/grid.hpp"
#include "data/normalization.hpp"
#include "growth/growth.hpp"
#include "json.hpp"

namespace canopy::data {

struct SyntheticWorldConfig {
  std::size_t rows = 48;
  std::size_t cols = 48;
  std::size_t years = 3;
  int first_year = 2018;
  double slope_min = 0.5;  // m/yr
  double slope_max = 2.5;
  double initial_min = 12.0;  // m
  double initial_max = 30.0;
  double disturbance_probability = 0.25;  // per stand
  // Post-disturbance height before capping to what the drop predicate allows.
  double residual_min = 0.0;
  double residual_max = 4.0;
  double noise_std = 0.02;  // in normalised units
  double label_sparsity = 0.9;  // share of (pixel, year) sites without a label
  std::size_t stand_size = 8;   // pixels per side of a stand sharing growth and disturbance
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticWorldConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticWorldConfig& cfg);

struct SyntheticPatch {
  std::size_t index = 0;
  SourceStack input;                // [18, 12 Y, H, W], normalised
  Grid3<float> labels;              // Y x H x W, 0 where unlabelled
  Grid3<std::uint8_t> valid;        // Y x H x W
  Grid3<float> truth;               // Y x H x W
  Grid2<int> disturbance_year;      // 1-based year of the drop's start, 0 when undisturbed
};

// Patch `index` of the world. Each patch draws from its own stream derived
// from (cfg.seed, index), so patches can be generated in any order.
SyntheticPatch synth_generate(const SyntheticWorldConfig& cfg, std::size_t index = 0);

// The drop predicate the generator builds disturbances against.
growth::GrowthConfig synthetic_predicate();

// Arrays: input, labels, mask, truth (f32) and disturbance_year (i32).
Container patch_to_container(const SyntheticPatch& patch, const SyntheticWorldConfig& cfg);
SyntheticPatch patch_from_container(const Container& c);

void write_patch(const std::filesystem::path& path, const SyntheticPatch& patch, const SyntheticWorldConfig& cfg);
SyntheticPatch read_patch(const std::filesystem::path& path);

}  // namespace canopy::data
