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

// Spatial train/test separation.

#pragma once

#include <cstddef>
#include <vector>

namespace canopy::data {

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

// Axis-aligned square of side `size` centred on (cx, cy).
Rect square_at(double cx, double cy, double size);

// Shortest distance between two rectangles; 0 when they touch or overlap.
double rect_distance(const Rect& a, const Rect& b);

struct SplitPolicy {
  double patch_size = 960.0;   // side of a training patch footprint (m)
  double min_distance = 360.0; // m
};

struct PatchCenter {
  double x = 0.0;
  double y = 0.0;
};

// Indices of the training patches kept, i.e. whose footprint stays at least
// min_distance away from the test rectangle. Order is preserved.
std::vector<std::size_t> split_min_distance(const std::vector<PatchCenter>& train, const Rect& test_area,
                                            const SplitPolicy& policy = {});

}  // namespace canopy::data
