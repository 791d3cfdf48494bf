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

// Index plans for 3D (shifted) window attention over a T x H x W token grid.
//
// Axes longer than the requested window are padded up to a multiple of it;
// axes that fit inside one window use the whole extent as the window and are
// never shifted. A shifted plan cyclically rolls the padded grid by -shift, so
// padded position p holds token (p + shift) mod P. Keys are masked when they
// are padding or lie in a different roll region than the query.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace canopy::model {

using Extent3 = std::array<std::size_t, 3>;

struct WindowPlan {
  Extent3 extent{};
  Extent3 window{};
  Extent3 shift{};
  Extent3 padded{};
  std::size_t windows = 0;
  std::size_t tokens_per_window = 0;
  // Window slot (window * N + local) -> token index, or -1 for padding.
  std::vector<std::int64_t> gather;
  // Token index -> window slot.
  std::vector<std::int64_t> scatter;
  // Distinct [N, N] blocking patterns (1 = blocked), stacked, and the pattern
  // used by each window. Both empty when nothing is ever blocked.
  std::vector<std::uint8_t> blocked;
  std::size_t mask_groups = 0;
  std::vector<std::uint32_t> mask_of_window;
  // [N, N] index into a ((2wt-1)(2wh-1)(2ww-1)) relative position table.
  std::vector<std::int64_t> relative_index;

  std::size_t table_size() const { return (2 * window[0] - 1) * (2 * window[1] - 1) * (2 * window[2] - 1); }
};

WindowPlan make_window_plan(const Extent3& extent, const Extent3& requested_window, bool shifted);

}  // namespace canopy::model
