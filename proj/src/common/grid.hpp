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
#include <span>
#include <vector>

#include "common/error.hpp"

namespace canopy {

// Row-major H x W raster.
template <typename T>
struct Grid2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid2() = default;
  Grid2(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), values(r * c, fill) {}

  T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::size_t size() const { return values.size(); }
};

// Row-major D x H x W stack; used for Y x H x W year-major height cubes.
template <typename T>
struct Grid3 {
  std::size_t depth = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid3() = default;
  Grid3(std::size_t d, std::size_t r, std::size_t c, T fill = T{})
      : depth(d), rows(r), cols(c), values(d * r * c, fill) {}

  T& at(std::size_t d, std::size_t r, std::size_t c) { return values[(d * rows + r) * cols + c]; }
  const T& at(std::size_t d, std::size_t r, std::size_t c) const {
    return values[(d * rows + r) * cols + c];
  }
  std::size_t size() const { return values.size(); }
  std::size_t plane() const { return rows * cols; }

  // Depth-axis series of one pixel.
  std::vector<T> series(std::size_t r, std::size_t c) const {
    std::vector<T> out(depth);
    for (std::size_t d = 0; d < depth; ++d) out[d] = at(d, r, c);
    return out;
  }
  void set_series(std::size_t r, std::size_t c, std::span<const T> s) {
    require(s.size() == depth, "series length ", s.size(), " does not match depth ", depth);
    for (std::size_t d = 0; d < depth; ++d) at(d, r, c) = s[d];
  }

  bool same_shape(const Grid3& o) const {
    return depth == o.depth && rows == o.rows && cols == o.cols;
  }
};

}  // namespace canopy
