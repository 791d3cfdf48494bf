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

// GEDI shot filtering, rasterisation to the 10 m grid and the slope and urban
// exclusion predicates.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "common/grid.hpp"

namespace canopy::data {

enum class BeamPower { kHigh, kLow };

struct GediShot {
  double rh98 = 0.0;  // m
  BeamPower beam_power = BeamPower::kHigh;
  int num_modes = 0;
  int quality_flag = 0;
  int degrade_flag = 0;
  double sensitivity = 0.0;
  // Position of the highest return, already in the label grid's coordinate
  // system (lon -> x, lat -> y). Reprojection happens upstream.
  double lon = 0.0;
  double lat = 0.0;
  int year = 0;
};

struct FilterResult {
  bool accepted = true;
  std::string reason;  // first failing criterion; empty when accepted
};

// Criteria in order: rh98, beam_power, num_modes, quality_flag, degrade_flag,
// sensitivity.
FilterResult gedi_quality_filter(const GediShot& shot);

// CSV with header
//   rh98,beam_power,num_modes,quality_flag,degrade_flag,sensitivity,
//   lon_highestreturn,lat_highestreturn,year
// where beam_power is "high" or "low". Columns may appear in any order; extra
// columns are ignored.
std::vector<GediShot> read_gedi_csv(const std::filesystem::path& path);

// North-up raster: pixel (r, c) covers lon in [x0 + c p, x0 + (c+1) p) and
// lat in (y0 - (r+1) p, y0 - r p].
struct GridGeometry {
  double x0 = 0.0;
  double y0 = 0.0;
  double pixel = 10.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int first_year = 0;
  std::size_t years = 0;
};

struct LabelGrid {
  Grid3<float> heights;        // Y x H x W
  Grid3<std::uint8_t> valid;   // Y x H x W
};

struct RasterizeResult {
  LabelGrid labels;
  std::size_t used = 0;
  std::size_t outside = 0;  // outside the grid or its years
};

// Each shot lands in the pixel holding its highest return for its year; the
// maximum rh98 wins when shots share a pixel and year.
RasterizeResult rasterize_labels(const std::vector<GediShot>& shots, const GridGeometry& geometry);

// Angle (degrees) of the least-squares plane through the elevation samples
// whose pixel centres lie within `radius` of the centre pixel. `dem` must be
// square with odd size and cover the radius.
double terrain_slope_degrees(const Grid2<double>& dem, double pixel = 10.0, double radius = 70.0);

// True when the slope exceeds max_degrees.
bool slope_exclusion(const Grid2<double>& dem, double pixel = 10.0, double radius = 70.0, double max_degrees = 20.0);

// True when the urban fraction exceeds 0.10. Throws outside [0, 1].
bool urban_exclusion(double urban_fraction);

}  // namespace canopy::data
