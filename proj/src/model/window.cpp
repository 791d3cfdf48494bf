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

#include "model/window.hpp"

#include <map>

#include "common/error.hpp"

namespace canopy::model {

namespace {

// Roll region of padded position p along one axis: 0 = untouched,
// 1 = [P - w, P - s), 2 = wrapped tail [P - s, P).
int region(std::size_t p, std::size_t padded, std::size_t window, std::size_t shift) {
  if (shift == 0) return 0;
  if (p < padded - window) return 0;
  if (p < padded - shift) return 1;
  return 2;
}

}  // namespace

WindowPlan make_window_plan(const Extent3& extent, const Extent3& requested_window, bool shifted) {
  WindowPlan plan;
  plan.extent = extent;
  for (int a = 0; a < 3; ++a) {
    require(extent[a] >= 1 && requested_window[a] >= 1, "window plan: extents and windows must be >= 1");
    if (extent[a] <= requested_window[a]) {
      plan.window[a] = extent[a];
      plan.shift[a] = 0;
    } else {
      plan.window[a] = requested_window[a];
      plan.shift[a] = shifted ? requested_window[a] / 2 : 0;
    }
    plan.padded[a] = (extent[a] + plan.window[a] - 1) / plan.window[a] * plan.window[a];
  }
  const auto& w = plan.window;
  const auto& P = plan.padded;
  const std::size_t nwin[3] = {P[0] / w[0], P[1] / w[1], P[2] / w[2]};
  plan.windows = nwin[0] * nwin[1] * nwin[2];
  const std::size_t N = w[0] * w[1] * w[2];
  plan.tokens_per_window = N;

  const std::size_t tokens = extent[0] * extent[1] * extent[2];
  plan.gather.assign(plan.windows * N, -1);
  plan.scatter.assign(tokens, -1);
  std::vector<int> slot_region(plan.windows * N, 0);
  bool any_pad = false;
  bool any_shift = plan.shift[0] || plan.shift[1] || plan.shift[2];

  for (std::size_t bt = 0; bt < nwin[0]; ++bt)
    for (std::size_t bh = 0; bh < nwin[1]; ++bh)
      for (std::size_t bw = 0; bw < nwin[2]; ++bw) {
        const std::size_t win = (bt * nwin[1] + bh) * nwin[2] + bw;
        for (std::size_t lt = 0; lt < w[0]; ++lt)
          for (std::size_t lh = 0; lh < w[1]; ++lh)
            for (std::size_t lw = 0; lw < w[2]; ++lw) {
              const std::size_t slot = win * N + (lt * w[1] + lh) * w[2] + lw;
              const std::size_t p[3] = {bt * w[0] + lt, bh * w[1] + lh, bw * w[2] + lw};
              int reg = 0;
              bool pad = false;
              std::size_t q[3];
              for (int a = 0; a < 3; ++a) {
                q[a] = (p[a] + plan.shift[a]) % P[a];
                pad = pad || q[a] >= extent[a];
                reg = reg * 3 + region(p[a], P[a], w[a], plan.shift[a]);
              }
              slot_region[slot] = reg;
              if (pad) {
                any_pad = true;
                continue;
              }
              const std::size_t token = (q[0] * extent[1] + q[1]) * extent[2] + q[2];
              plan.gather[slot] = static_cast<std::int64_t>(token);
              plan.scatter[token] = static_cast<std::int64_t>(slot);
            }
      }

  if (any_pad || any_shift) {
    // Only windows on the trailing edge of an axis differ, so patterns are
    // stored once and referenced per window.
    std::map<std::vector<std::uint8_t>, std::uint32_t> ids;
    std::vector<std::uint8_t> pattern(N * N);
    plan.mask_of_window.resize(plan.windows);
    for (std::size_t win = 0; win < plan.windows; ++win) {
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
          const std::size_t si = win * N + i, sj = win * N + j;
          pattern[i * N + j] = (plan.gather[sj] < 0 || slot_region[si] != slot_region[sj]) ? 1 : 0;
        }
      auto [it, inserted] = ids.emplace(pattern, static_cast<std::uint32_t>(ids.size()));
      if (inserted) plan.blocked.insert(plan.blocked.end(), pattern.begin(), pattern.end());
      plan.mask_of_window[win] = it->second;
    }
    plan.mask_groups = ids.size();
  }

  plan.relative_index.resize(N * N);
  const std::size_t span_h = 2 * w[1] - 1, span_w = 2 * w[2] - 1;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t it = i / (w[1] * w[2]), ih = (i / w[2]) % w[1], iw = i % w[2];
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t jt = j / (w[1] * w[2]), jh = (j / w[2]) % w[1], jw = j % w[2];
      const std::size_t rt = it + w[0] - 1 - jt, rh = ih + w[1] - 1 - jh, rw = iw + w[2] - 1 - jw;
      plan.relative_index[i * N + j] = static_cast<std::int64_t>((rt * span_h + rh) * span_w + rw);
    }
  }
  return plan;
}

}  // namespace canopy::model
