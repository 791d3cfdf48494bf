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

#include "data/split.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace canopy::data {

Rect square_at(double cx, double cy, double size) {
  const double h = size / 2.0;
  return {cx - h, cy - h, cx + h, cy + h};
}

double rect_distance(const Rect& a, const Rect& b) {
  const double dx = std::max({0.0, b.x_min - a.x_max, a.x_min - b.x_max});
  const double dy = std::max({0.0, b.y_min - a.y_max, a.y_min - b.y_max});
  return std::hypot(dx, dy);
}

std::vector<std::size_t> split_min_distance(const std::vector<PatchCenter>& train, const Rect& test_area,
                                            const SplitPolicy& policy) {
  require(test_area.width() > 0.0 && test_area.height() > 0.0, "split: degenerate test area");
  require(policy.patch_size > 0.0 && policy.min_distance >= 0.0, "split: invalid policy");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& p = train[i];
    if (rect_distance(square_at(p.x, p.y, policy.patch_size), test_area) >= policy.min_distance) kept.push_back(i);
  }
  return kept;
}

}  // namespace canopy::data
