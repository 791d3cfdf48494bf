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

#include "data/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"

namespace canopy::data {

void NormalizationSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& c : channels) {
    require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi, "channel ", c.name, ": need lo < hi, got [",
            c.lo, ", ", c.hi, "]");
    require(seen.insert(c.name).second, "duplicate channel ", c.name);
  }
}

const ChannelRange& NormalizationSpec::find(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return c;
  fail(ErrorKind::kInvalidArgument, "unknown channel '", name, "'");
}

std::vector<std::string> NormalizationSpec::names() const {
  std::vector<std::string> out;
  for (const auto& c : channels) out.push_back(c.name);
  return out;
}

NormalizationSpec NormalizationSpec::standard() {
  NormalizationSpec s;
  const char* optical[kOpticalBands] = {"s2_b01", "s2_b02", "s2_b03", "s2_b04", "s2_b05", "s2_b06",
                                        "s2_b07", "s2_b08", "s2_b8a", "s2_b09", "s2_b11", "s2_b12"};
  const double hi[kOpticalBands] = {1000, 2000, 2000, 2000, 2000, 4000, 6000, 6000, 6000, 6000, 4000, 4000};
  for (std::size_t i = 0; i < kOpticalBands; ++i) s.channels.push_back({optical[i], 0.0, hi[i]});
  s.channels.push_back({"s1_vh_asc", -50.0, 1.0});
  s.channels.push_back({"s1_vh_desc", -50.0, 1.0});
  s.channels.push_back({"palsar_hh", -50.0, 1.0});
  s.channels.push_back({"palsar_hv", -50.0, 1.0});
  s.channels.push_back({"dem", 0.0, 7000.0});
  s.channels.push_back({"forest_class", 0.0, 2.0});
  return s;
}

nlohmann::json to_json(const NormalizationSpec& spec) {
  auto arr = nlohmann::json::array();
  for (const auto& c : spec.channels) arr.push_back({{"name", c.name}, {"lo", c.lo}, {"hi", c.hi}});
  return arr;
}

double normalize_value(double x, const ChannelRange& range) {
  require(range.lo < range.hi, "channel ", range.name, ": empty range");
  const double v = 2.0 * (x - range.lo) / (range.hi - range.lo) - 1.0;
  return std::clamp(v, -1.0, 1.0);
}

std::vector<float> normalize_channel(std::span<const float> values, const NormalizationSpec& spec,
                                     const std::string& channel) {
  const auto& r = spec.find(channel);
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(normalize_value(values[i], r));
  return out;
}

SourceStack assemble_input(const SourceStack& optical, const SourceStack& quarterly_radar,
                           const SourceStack& yearly_radar, const SourceStack& dem, const SourceStack& forest_class,
                           std::size_t years) {
  require(years > 0, "need at least one year");
  const std::size_t T = kMonthsPerYear * years, H = optical.rows, W = optical.cols;
  auto check = [&](const SourceStack& s, const char* what, std::size_t channels, std::size_t steps) {
    if (s.channels != channels || s.steps != steps)
      fail(ErrorKind::kData, what, ": expected ", channels, " channels x ", steps, " steps, got ", s.channels, " x ",
           s.steps);
    if (s.rows != H || s.cols != W)
      fail(ErrorKind::kData, what, ": grid ", s.rows, "x", s.cols, " differs from the optical grid ", H, "x", W);
    if (s.values.size() != channels * steps * H * W) fail(ErrorKind::kData, what, ": malformed value buffer");
  };
  check(optical, "optical", kOpticalBands, T);
  check(quarterly_radar, "quarterly radar", kQuarterlyRadar, 4 * years);
  check(yearly_radar, "yearly radar", kYearlyRadar, years);
  check(dem, "elevation", 1, 1);
  check(forest_class, "forest class", 1, 1);

  SourceStack out(kInputChannels, T, H, W);
  const std::size_t plane = H * W;
  auto copy_plane = [&](const SourceStack& s, std::size_t sc, std::size_t st, std::size_t oc, std::size_t ot) {
    std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>((sc * s.steps + st) * plane), plane,
                out.values.begin() + static_cast<std::ptrdiff_t>((oc * T + ot) * plane));
  };
  std::size_t oc = 0;
  for (std::size_t c = 0; c < kOpticalBands; ++c, ++oc)
    for (std::size_t t = 0; t < T; ++t) copy_plane(optical, c, t, oc, t);
  for (std::size_t c = 0; c < kQuarterlyRadar; ++c, ++oc)
    for (std::size_t t = 0; t < T; ++t) copy_plane(quarterly_radar, c, t / 3, oc, t);
  for (std::size_t c = 0; c < kYearlyRadar; ++c, ++oc)
    for (std::size_t t = 0; t < T; ++t) copy_plane(yearly_radar, c, t / kMonthsPerYear, oc, t);
  for (const auto* s : {&dem, &forest_class}) {
    for (std::size_t t = 0; t < T; ++t) copy_plane(*s, 0, 0, oc, t);
    ++oc;
  }
  return out;
}

}  // namespace canopy::data
