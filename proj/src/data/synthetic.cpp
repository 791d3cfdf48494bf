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

#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "common/error.hpp"

namespace canopy::data {

void SyntheticWorldConfig::validate() const {
  require(rows > 0 && cols > 0, "synthetic world: empty grid");
  require(years >= 2, "synthetic world: need at least 2 years");
  require(slope_min >= 0.0 && slope_min <= slope_max && slope_max <= 3.0,
          "synthetic world: growth slopes must satisfy 0 <= min <= max <= 3, got [", slope_min, ", ", slope_max, "]");
  const auto pred = synthetic_predicate();
  // A pre-disturbance height of at least 2 * drop_absolute leaves room for a
  // non-negative post-disturbance height that passes both drop tests.
  require(initial_min >= 2.0 * pred.drop_absolute && initial_min <= initial_max,
          "synthetic world: initial heights must satisfy ", 2.0 * pred.drop_absolute, " <= min <= max, got [",
          initial_min, ", ", initial_max, "]");
  require(disturbance_probability >= 0.0 && disturbance_probability <= 1.0,
          "synthetic world: disturbance probability outside [0, 1]");
  require(residual_min >= 0.0 && residual_min <= residual_max, "synthetic world: invalid residual range");
  require(std::isfinite(noise_std) && noise_std >= 0.0, "synthetic world: negative noise");
  require(label_sparsity >= 0.0 && label_sparsity <= 1.0, "synthetic world: label sparsity outside [0, 1]");
  require(stand_size >= 1, "synthetic world: stand size must be positive");
}

SyntheticWorldConfig synthetic_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "synthetic world config must be a JSON object");
  SyntheticWorldConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "rows") c.rows = v.get<std::size_t>();
      else if (k == "cols") c.cols = v.get<std::size_t>();
      else if (k == "years") c.years = v.get<std::size_t>();
      else if (k == "first_year") c.first_year = v.get<int>();
      else if (k == "slope_min") c.slope_min = v.get<double>();
      else if (k == "slope_max") c.slope_max = v.get<double>();
      else if (k == "initial_min") c.initial_min = v.get<double>();
      else if (k == "initial_max") c.initial_max = v.get<double>();
      else if (k == "disturbance_probability") c.disturbance_probability = v.get<double>();
      else if (k == "residual_min") c.residual_min = v.get<double>();
      else if (k == "residual_max") c.residual_max = v.get<double>();
      else if (k == "noise_std") c.noise_std = v.get<double>();
      else if (k == "label_sparsity") c.label_sparsity = v.get<double>();
      else if (k == "stand_size") c.stand_size = v.get<std::size_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else fail(ErrorKind::kInvalidArgument, "synthetic world config: unknown key '", k, "'");
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::kInvalidArgument, "synthetic world config: bad value for '", k, "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const SyntheticWorldConfig& c) {
  return {{"rows", c.rows},
          {"cols", c.cols},
          {"years", c.years},
          {"first_year", c.first_year},
          {"slope_min", c.slope_min},
          {"slope_max", c.slope_max},
          {"initial_min", c.initial_min},
          {"initial_max", c.initial_max},
          {"disturbance_probability", c.disturbance_probability},
          {"residual_min", c.residual_min},
          {"residual_max", c.residual_max},
          {"noise_std", c.noise_std},
          {"label_sparsity", c.label_sparsity},
          {"stand_size", c.stand_size},
          {"seed", c.seed}};
}

growth::GrowthConfig synthetic_predicate() { return growth::GrowthConfig{}; }

namespace {

struct Stand {
  double initial = 0.0;
  double slope = 0.0;
  int disturbed_year = 0;
};

// Response of a channel to canopy height as a share of its value range:
// a smooth monotone step with a per-channel centre and direction, plus a
// seasonal term for time-varying channels.
struct Response {
  double centre;
  double width;
  double sign;
  double seasonal;
  double phase;
};

Response response_for(std::size_t channel) {
  const double k = static_cast<double>(channel);
  return {4.0 + 2.2 * k, 9.0 + 0.5 * k, channel % 2 == 0 ? 1.0 : -1.0, 0.06, 1.7 * k};
}

double share(const Response& r, double height, double month) {
  return 0.5 + 0.35 * r.sign * std::tanh((height - r.centre) / r.width) +
         r.seasonal * std::sin(2.0 * std::numbers::pi * (month + r.phase) / 12.0);
}

}  // namespace

SyntheticPatch synth_generate(const SyntheticWorldConfig& cfg, std::size_t index) {
  cfg.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t{index} >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::size_t Y = cfg.years, H = cfg.rows, W = cfg.cols, T = kMonthsPerYear * Y;
  const auto pred = synthetic_predicate();

  SyntheticPatch p;
  p.index = index;
  p.truth = Grid3<float>(Y, H, W);
  p.labels = Grid3<float>(Y, H, W, 0.0f);
  p.valid = Grid3<std::uint8_t>(Y, H, W, 0);
  p.disturbance_year = Grid2<int>(H, W, 0);

  const std::size_t sr = (H + cfg.stand_size - 1) / cfg.stand_size;
  const std::size_t sc = (W + cfg.stand_size - 1) / cfg.stand_size;
  std::vector<Stand> stands(sr * sc);
  for (auto& s : stands) {
    s.initial = uniform(cfg.initial_min, cfg.initial_max);
    s.slope = uniform(cfg.slope_min, cfg.slope_max);
    if (unit(rng) < cfg.disturbance_probability)
      s.disturbed_year = 1 + static_cast<int>(std::min<double>(unit(rng) * static_cast<double>(Y - 1),
                                                               static_cast<double>(Y - 2)));
  }

  // Truth trajectories.
  std::vector<double> z(Y);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const auto& s = stands[(r / cfg.stand_size) * sc + c / cfg.stand_size];
      const double initial = std::clamp(s.initial + 1.5 * normal(rng), cfg.initial_min, cfg.initial_max);
      const double slope = std::clamp(s.slope + 0.2 * normal(rng), cfg.slope_min, cfg.slope_max);
      const double residual = uniform(cfg.residual_min, cfg.residual_max);
      z[0] = initial;
      for (std::size_t y = 1; y < Y; ++y) {
        if (static_cast<int>(y) == s.disturbed_year) {
          const double now = z[y - 1];
          const double cap = std::min({pred.drop_fraction * now, now - pred.drop_absolute, pred.low_threshold});
          z[y] = std::min(residual, cap);
        } else {
          z[y] = z[y - 1] + slope;
        }
      }
      p.disturbance_year.at(r, c) = s.disturbed_year;
      for (std::size_t y = 0; y < Y; ++y) p.truth.at(y, r, c) = static_cast<float>(z[y]);
    }

  // Labels at sparse sites.
  for (std::size_t i = 0; i < p.truth.size(); ++i)
    if (unit(rng) >= cfg.label_sparsity) {
      p.labels.values[i] = p.truth.values[i];
      p.valid.values[i] = 1;
    }

  // Raw sources in their native units, then normalised per channel.
  const auto spec = NormalizationSpec::standard();
  const std::size_t plane = H * W;
  auto render = [&](std::size_t first_channel, std::size_t channels, std::size_t steps, std::size_t months_per_step) {
    SourceStack s(channels, steps, H, W);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const auto& range = spec.channels[first_channel + ch];
      const auto resp = response_for(first_channel + ch);
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t year = t * months_per_step / kMonthsPerYear;
        const double month = static_cast<double>((t * months_per_step) % kMonthsPerYear);
        for (std::size_t i = 0; i < plane; ++i) {
          const double h = p.truth.values[year * plane + i];
          const double v = share(resp, h, month) + 0.5 * cfg.noise_std * normal(rng);
          s.values[(ch * steps + t) * plane + i] = static_cast<float>(range.lo + v * (range.hi - range.lo));
        }
      }
      std::span<float> block(s.values.data() + ch * steps * plane, steps * plane);
      const auto normed = normalize_channel(block, spec, range.name);
      std::copy(normed.begin(), normed.end(), block.begin());
    }
    return s;
  };
  const auto optical = render(0, kOpticalBands, T, 1);
  const auto quarterly = render(kOpticalBands, kQuarterlyRadar, 4 * Y, 3);
  const auto yearly = render(kOpticalBands + kQuarterlyRadar, kYearlyRadar, Y, kMonthsPerYear);

  // Smooth terrain and a forest class from the first-year height.
  SourceStack dem(1, 1, H, W), forest(1, 1, H, W);
  const double base = uniform(100.0, 2000.0), gx = uniform(-2.0, 2.0), gy = uniform(-2.0, 2.0);
  const auto& dem_range = spec.find("dem");
  const auto& forest_range = spec.find("forest_class");
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const double e = base + gx * static_cast<double>(c) + gy * static_cast<double>(r);
      dem.at(0, 0, r, c) = static_cast<float>(normalize_value(e, dem_range));
      const double h0 = p.truth.at(0, r, c);
      const double cls = h0 >= 15.0 ? 2.0 : (h0 >= 5.0 ? 1.0 : 0.0);
      forest.at(0, 0, r, c) = static_cast<float>(normalize_value(cls, forest_range));
    }
  p.input = assemble_input(optical, quarterly, yearly, dem, forest, Y);
  return p;
}

Container patch_to_container(const SyntheticPatch& p, const SyntheticWorldConfig& cfg) {
  const std::size_t Y = p.truth.depth, H = p.truth.rows, W = p.truth.cols;
  Container c;
  c.magic = kPatchMagic;
  c.metadata = {{"index", p.index},
                {"seed", cfg.seed},
                {"world", to_json(cfg)},
                {"channels", NormalizationSpec::standard().names()},
                {"normalization", to_json(NormalizationSpec::standard())},
                {"years", Y},
                {"first_year", cfg.first_year}};
  std::vector<float> mask(p.valid.values.begin(), p.valid.values.end());
  const std::vector<std::size_t> cube{Y, H, W};
  c.arrays.push_back(ContainerArray::from<float>(
      "input", {p.input.channels, p.input.steps, p.input.rows, p.input.cols}, p.input.values));
  c.arrays.push_back(ContainerArray::from<float>("labels", cube, p.labels.values));
  c.arrays.push_back(ContainerArray::from<float>("mask", cube, mask));
  c.arrays.push_back(ContainerArray::from<float>("truth", cube, p.truth.values));
  c.arrays.push_back(ContainerArray::from<std::int32_t>("disturbance_year", {H, W}, p.disturbance_year.values));
  return c;
}

SyntheticPatch patch_from_container(const Container& c) {
  const auto& in = c.get("input");
  const auto& truth = c.get("truth");
  if (in.dtype != DType::kF32 || in.shape.size() != 4 || in.shape[0] != kInputChannels)
    fail(ErrorKind::kData, "patch input must be f32 [", kInputChannels, ", T, H, W]");
  if (truth.shape.size() != 3) fail(ErrorKind::kData, "patch truth must be [Y, H, W]");
  const std::size_t Y = truth.shape[0], H = truth.shape[1], W = truth.shape[2];
  if (in.shape[1] != kMonthsPerYear * Y || in.shape[2] != H || in.shape[3] != W)
    fail(ErrorKind::kData, "patch input and truth shapes disagree");
  auto cube = [&](const char* name) {
    const auto& a = c.get(name);
    if (a.dtype != DType::kF32 || a.shape != truth.shape)
      fail(ErrorKind::kData, "patch array ", name, " must be f32 [", Y, ", ", H, ", ", W, "]");
    Grid3<float> g(Y, H, W);
    g.values = a.as<float>();
    return g;
  };
  SyntheticPatch p;
  p.index = c.metadata.value("index", std::size_t{0});
  p.input = SourceStack(in.shape[0], in.shape[1], H, W);
  p.input.values = in.as<float>();
  p.truth = cube("truth");
  p.labels = cube("labels");
  const auto mask = cube("mask");
  p.valid = Grid3<std::uint8_t>(Y, H, W);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.values[i] != 0.0f && mask.values[i] != 1.0f) fail(ErrorKind::kData, "patch mask must be 0 or 1");
    p.valid.values[i] = mask.values[i] != 0.0f;
  }
  for (std::size_t i = 0; i < p.labels.size(); ++i)
    if (p.valid.values[i] && !std::isfinite(p.labels.values[i])) fail(ErrorKind::kData, "non-finite label");
  const auto& dist = c.get("disturbance_year");
  if (dist.dtype != DType::kI32 || dist.shape != std::vector<std::size_t>{H, W})
    fail(ErrorKind::kData, "patch disturbance_year must be i32 [", H, ", ", W, "]");
  p.disturbance_year = Grid2<int>(H, W);
  const auto d = dist.as<std::int32_t>();
  std::copy(d.begin(), d.end(), p.disturbance_year.values.begin());
  return p;
}

void write_patch(const std::filesystem::path& path, const SyntheticPatch& patch, const SyntheticWorldConfig& cfg) {
  write_container(path, patch_to_container(patch, cfg));
}

SyntheticPatch read_patch(const std::filesystem::path& path) {
  return patch_from_container(read_container(path, kPatchMagic));
}

}  // namespace canopy::data
