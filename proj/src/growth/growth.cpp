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

#include "growth/growth.hpp"

#include <algorithm>
#include <cmath>

namespace canopy::growth {

void GrowthConfig::validate() const {
  require(std::isfinite(s_min) && std::isfinite(s_max) && s_min < s_max,
          "growth config: need s_min < s_max, got [", s_min, ", ", s_max, "]");
  require(drop_fraction > 0.0 && drop_fraction < 1.0, "growth config: drop_fraction must lie in (0,1)");
  require(drop_absolute > 0.0, "growth config: drop_absolute must be positive");
  require(low_threshold > 0.0, "growth config: low_threshold must be positive");
  require(pool_size >= 1 && pool_size % 2 == 1, "growth config: pool_size must be odd and >= 1");
}

void validate_height_series(std::span<const double> z) {
  require(z.size() >= 2, "height series needs at least 2 years, got ", z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    require(std::isfinite(z[i]) && z[i] >= 0.0, "height series entry ", i + 1,
            " must be finite and non-negative, got ", z[i]);
  }
}

namespace {

void validate_finite(std::span<const double> z) {
  for (double v : z) require(std::isfinite(v), "non-finite height in series");
}

// Unchecked kernels shared by the series and grid entry points.
std::vector<int> detect_years(std::span<const double> z, const GrowthConfig& cfg) {
  const std::size_t n = z.size();
  std::vector<int> years;
  for (std::size_t y = 0; y + 1 < n; ++y) {
    const double now = z[y];
    const double next = z[y + 1];
    const bool dropped = next <= std::min(cfg.drop_fraction * now, now - cfg.drop_absolute);
    // The two-year window is truncated at the end of the series.
    const double low = (y + 2 < n) ? std::min(next, z[y + 2]) : next;
    if (dropped && low <= cfg.low_threshold) years.push_back(static_cast<int>(y + 1));
  }
  return years;
}

int local_index(std::span<const double> z, const GrowthConfig& cfg) {
  const auto years = detect_years(z, cfg);
  return years.empty() ? static_cast<int>(z.size()) : years.front();
}

void fit_segment(std::span<const double> z, double s_min, double s_max, double* out,
                 double* slope_out = nullptr, double* intercept_out = nullptr) {
  const std::size_t n = z.size();
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(n);

  double ols = 0.0;
  if (n >= 2) {
    const double x_mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = static_cast<double>(i + 1) - x_mean;
      sxy += dx * (z[i] - mean);
      sxx += dx * dx;
    }
    ols = sxy / sxx;
  }
  const double slope = std::min(std::max(ols, s_min), s_max);
  const double intercept = mean - slope * (static_cast<double>(n) + 1.0) / 2.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = slope * static_cast<double>(i + 1) + intercept;
  if (slope_out) *slope_out = slope;
  if (intercept_out) *intercept_out = intercept;
}

void piecewise_fit(std::span<const double> z, int split, const GrowthConfig& cfg, double* out) {
  const auto pre = static_cast<std::size_t>(split);
  fit_segment(z.subspan(0, pre), cfg.s_min, cfg.s_max, out);
  if (pre < z.size()) fit_segment(z.subspan(pre), cfg.s_min, cfg.s_max, out + pre);
}

double distance(std::span<const double> pseudo, std::span<const double> pred, LossNorm norm) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const double d = pseudo[i] - pred[i];
    acc += (norm == LossNorm::kL2) ? d * d : std::abs(d);
  }
  const double len = (norm == LossNorm::kL2) ? std::sqrt(acc) : acc;
  return len / static_cast<double>(pseudo.size());
}

void check_split(int split_year, std::size_t years) {
  require(split_year >= 1 && static_cast<std::size_t>(split_year) <= years, "split year ",
          split_year, " outside 1..", years);
}

}  // namespace

std::vector<int> detect_disturbance_years(std::span<const double> z, const GrowthConfig& cfg) {
  validate_height_series(z);
  return detect_years(z, cfg);
}

int local_disturbance_index(std::span<const double> z, const GrowthConfig& cfg) {
  validate_height_series(z);
  return local_index(z, cfg);
}

DisturbanceMap min_pool(const DisturbanceMap& grid, int pool_size) {
  require(pool_size >= 1 && pool_size % 2 == 1, "pool size must be odd and >= 1");
  require(grid.values.size() == grid.rows * grid.cols, "malformed disturbance grid");
  const auto r = static_cast<std::ptrdiff_t>(pool_size / 2);
  const auto rows = static_cast<std::ptrdiff_t>(grid.rows);
  const auto cols = static_cast<std::ptrdiff_t>(grid.cols);
  DisturbanceMap out(grid.rows, grid.cols);
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      int m = grid.at(i, j);
      for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - r); a <= std::min(rows - 1, i + r); ++a)
        for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, j - r); b <= std::min(cols - 1, j + r); ++b)
          m = std::min(m, grid.at(a, b));
      out.at(i, j) = m;
    }
  }
  return out;
}

RegressionFit constrained_linreg(std::span<const double> z, double s_min, double s_max) {
  require(!z.empty(), "constrained_linreg needs at least one value");
  require(s_min < s_max, "constrained_linreg needs s_min < s_max");
  validate_finite(z);
  RegressionFit fit;
  fit.fitted.resize(z.size());
  fit_segment(z, s_min, s_max, fit.fitted.data(), &fit.slope, &fit.intercept);
  return fit;
}

PseudoLabelSeries pseudo_labels(std::span<const double> z_ref, int split_year, const GrowthConfig& cfg) {
  cfg.validate();
  // Fitted values may dip below zero; re-fitting them must still work.
  require(z_ref.size() >= 2, "height series needs at least 2 years, got ", z_ref.size());
  validate_finite(z_ref);
  check_split(split_year, z_ref.size());
  PseudoLabelSeries out;
  out.split_year = split_year;
  out.values.resize(z_ref.size());
  piecewise_fit(z_ref, split_year, cfg, out.values.data());
  return out;
}

double label_distance(std::span<const double> pseudo, std::span<const double> pred,
                      const GrowthConfig& cfg) {
  require(pseudo.size() == pred.size(), "length mismatch: ", pseudo.size(), " vs ", pred.size());
  require(!pseudo.empty(), "empty series");
  validate_finite(pseudo);
  validate_finite(pred);
  return distance(pseudo, pred, cfg.norm);
}

double growth_loss(std::span<const double> z_ref, std::span<const double> z_pred, int split_year,
                   const GrowthConfig& cfg) {
  require(z_ref.size() == z_pred.size(), "length mismatch: ", z_ref.size(), " vs ", z_pred.size());
  const auto pseudo = pseudo_labels(z_ref, split_year, cfg);
  return label_distance(pseudo.values, z_pred, cfg);
}

double growth_loss(std::span<const double> z_ref, std::span<const double> z_pred,
                   const GrowthConfig& cfg) {
  return growth_loss(z_ref, z_pred, local_disturbance_index(z_ref, cfg), cfg);
}

DisturbanceMap local_disturbance_map(const Grid3<double>& z_ref, const GrowthConfig& cfg) {
  cfg.validate();
  require(z_ref.depth >= 2, "disturbance map needs at least 2 years");
  require(z_ref.values.size() == z_ref.depth * z_ref.plane(), "malformed height cube");
  validate_finite(z_ref.values);
  DisturbanceMap local(z_ref.rows, z_ref.cols);
  std::vector<double> series(z_ref.depth);
  for (std::size_t r = 0; r < z_ref.rows; ++r)
    for (std::size_t c = 0; c < z_ref.cols; ++c) {
      for (std::size_t y = 0; y < z_ref.depth; ++y) series[y] = z_ref.at(y, r, c);
      local.at(r, c) = local_index(series, cfg);
    }
  return local;
}

DisturbanceMap disturbance_map(const Grid3<double>& z_ref, const GrowthConfig& cfg) {
  return min_pool(local_disturbance_map(z_ref, cfg), cfg.pool_size);
}

Grid3<double> pseudo_label_map(const Grid3<double>& z_ref, const DisturbanceMap& split,
                               const GrowthConfig& cfg) {
  cfg.validate();
  require(split.rows == z_ref.rows && split.cols == z_ref.cols, "split map shape mismatch");
  Grid3<double> out(z_ref.depth, z_ref.rows, z_ref.cols);
  std::vector<double> series(z_ref.depth);
  std::vector<double> fitted(z_ref.depth);
  for (std::size_t r = 0; r < z_ref.rows; ++r)
    for (std::size_t c = 0; c < z_ref.cols; ++c) {
      for (std::size_t y = 0; y < z_ref.depth; ++y) series[y] = z_ref.at(y, r, c);
      check_split(split.at(r, c), z_ref.depth);
      piecewise_fit(series, split.at(r, c), cfg, fitted.data());
      for (std::size_t y = 0; y < z_ref.depth; ++y) out.at(y, r, c) = fitted[y];
    }
  return out;
}

double growth_loss_map(const Grid3<double>& z_ref, const Grid3<double>& z_pred,
                       const GrowthConfig& cfg) {
  require(z_ref.same_shape(z_pred), "reference and prediction cubes differ in shape");
  validate_finite(z_pred.values);
  const auto split = disturbance_map(z_ref, cfg);
  const auto pseudo = pseudo_label_map(z_ref, split, cfg);
  double total = 0.0;
  std::vector<double> a(z_ref.depth), b(z_ref.depth);
  for (std::size_t r = 0; r < z_ref.rows; ++r)
    for (std::size_t c = 0; c < z_ref.cols; ++c) {
      for (std::size_t y = 0; y < z_ref.depth; ++y) {
        a[y] = pseudo.at(y, r, c);
        b[y] = z_pred.at(y, r, c);
      }
      total += distance(a, b, cfg.norm);
    }
  return total / static_cast<double>(z_ref.plane());
}

}  // namespace canopy::growth
