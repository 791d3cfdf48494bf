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

// Band scaling and assembly of the C x T x H x W model input.
//
// Channel order: optical bands 0-11 (Sentinel-2 without B10), quarterly radar
// VH ascending/descending, yearly radar HH/HV, elevation, forest class.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace canopy::data {

inline constexpr std::size_t kOpticalBands = 12;
inline constexpr std::size_t kQuarterlyRadar = 2;
inline constexpr std::size_t kYearlyRadar = 2;
inline constexpr std::size_t kInputChannels = kOpticalBands + kQuarterlyRadar + kYearlyRadar + 2;
inline constexpr std::size_t kMonthsPerYear = 12;

struct ChannelRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

struct NormalizationSpec {
  std::vector<ChannelRange> channels;

  // Throws unless every range has lo < hi and names are unique.
  void validate() const;
  const ChannelRange& find(const std::string& name) const;
  std::vector<std::string> names() const;

  // The 18-channel table used for model inputs.
  static NormalizationSpec standard();
};

nlohmann::json to_json(const NormalizationSpec& spec);

// clamp(2 (x - lo) / (hi - lo) - 1, -1, 1)
double normalize_value(double x, const ChannelRange& range);
std::vector<float> normalize_channel(std::span<const float> values, const NormalizationSpec& spec,
                                     const std::string& channel);

// Dense row-major [channels, steps, rows, cols] block of one source.
struct SourceStack {
  std::size_t channels = 0, steps = 0, rows = 0, cols = 0;
  std::vector<float> values;

  SourceStack() = default;
  SourceStack(std::size_t c, std::size_t t, std::size_t h, std::size_t w)
      : channels(c), steps(t), rows(h), cols(w), values(c * t * h * w, 0.0f) {}
  float& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) {
    return values[((c * steps + t) * rows + h) * cols + w];
  }
  float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
    return values[((c * steps + t) * rows + h) * cols + w];
  }
};

// Normalised sources for Y years -> [18, 12 Y, H, W]. Expected steps:
// optical 12 Y (monthly), quarterly radar 4 Y, yearly radar Y, and a single
// step for elevation and forest class. Quarterly composites are repeated over
// their three months, yearly ones over twelve, static ones over all steps.
SourceStack assemble_input(const SourceStack& optical, const SourceStack& quarterly_radar,
                           const SourceStack& yearly_radar, const SourceStack& dem, const SourceStack& forest_class,
                           std::size_t years);

}  // namespace canopy::data
