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

// Growth-consistent pseudo-labels for yearly canopy height series.
//
// A reference series is split at its (pooled) pre-disturbance year and each
// side is replaced by a least-squares line whose slope is clamped into a
// plausible growth interval. The growth loss is the distance of a second
// prediction to those fitted values.
//
// Year indices are 1-based throughout this header: a split year y means the
// pre-disturbance segment holds values 1..y and the post segment y+1..Y.

#pragma once

#include <span>
#include <vector>

#include "common/grid.hpp"

namespace canopy::growth {

enum class LossNorm { kL2, kL1 };

struct GrowthConfig {
  double s_min = 0.0;  // m/yr
  double s_max = 3.0;  // m/yr
  double drop_fraction = 0.5;
  double drop_absolute = 4.0;  // m
  double low_threshold = 10.0;  // m
  int pool_size = 3;
  LossNorm norm = LossNorm::kL2;

  void validate() const;
};

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> fitted;
};

struct PseudoLabelSeries {
  std::vector<double> values;
  int split_year = 0;
};

using DisturbanceMap = Grid2<int>;

// Throws unless the series has length >= 2 with finite, non-negative entries.
void validate_height_series(std::span<const double> z);

std::vector<int> detect_disturbance_years(std::span<const double> z, const GrowthConfig& cfg);

// Earliest detected year, or Y when nothing is detected.
int local_disturbance_index(std::span<const double> z, const GrowthConfig& cfg);

// Minimum over a pool_size x pool_size neighbourhood clipped to the grid.
DisturbanceMap min_pool(const DisturbanceMap& grid, int pool_size);

RegressionFit constrained_linreg(std::span<const double> z, double s_min, double s_max);

PseudoLabelSeries pseudo_labels(std::span<const double> z_ref, int split_year, const GrowthConfig& cfg);

// (1/Y) * ||pseudo - pred|| under cfg.norm.
double label_distance(std::span<const double> pseudo, std::span<const double> pred,
                      const GrowthConfig& cfg);

double growth_loss(std::span<const double> z_ref, std::span<const double> z_pred, int split_year,
                   const GrowthConfig& cfg);

// Single-pixel convenience: the split year is the pixel's own local index.
double growth_loss(std::span<const double> z_ref, std::span<const double> z_pred,
                   const GrowthConfig& cfg);

// Grid variants operate on Y x H x W cubes whose entries only need to be
// finite; model outputs may dip below zero.
DisturbanceMap local_disturbance_map(const Grid3<double>& z_ref, const GrowthConfig& cfg);
DisturbanceMap disturbance_map(const Grid3<double>& z_ref, const GrowthConfig& cfg);
Grid3<double> pseudo_label_map(const Grid3<double>& z_ref, const DisturbanceMap& split,
                               const GrowthConfig& cfg);
double growth_loss_map(const Grid3<double>& z_ref, const Grid3<double>& z_pred,
                       const GrowthConfig& cfg);

}  // namespace canopy::growth
