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

// Evaluation metrics for predicted canopy heights.
//
// Quantiles use linear interpolation between order statistics: for sorted
// x[0..n-1], q(p) = x[k] + (h - k) (x[k+1] - x[k]) with h = (n - 1) p and
// k = floor(h). IQR is q(0.75) - q(0.25). Statistics of empty groups are NaN.

#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "common/grid.hpp"

namespace canopy::eval {

struct PairedSample {
  double predicted = 0.0;  // m
  double label = 0.0;      // m
  double x = 0.0;
  double y = 0.0;
  int year = 0;
};

enum class R2Kind {
  kSquaredPearson,  // default
  kDetermination,   // 1 - SS_res / SS_tot
};

struct MetricReport {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent
  double r2 = 0.0;
  double r2_all = 0.0;
  double iqr_mae = 0.0;
  double iqr_mse = 0.0;
  double iqr_rmse = 0.0;
  double iqr_mape = 0.0;
  std::size_t n = 0;      // samples with label >= floor
  std::size_t n_all = 0;
  R2Kind r2_kind = R2Kind::kSquaredPearson;
};

double quantile(std::vector<double> values, double p);
// Squared Pearson correlation; NaN when either side has zero variance.
double squared_pearson(std::span<const double> a, std::span<const double> b);
double pearson(std::span<const double> a, std::span<const double> b);
// Coefficient of determination of `predicted` against `label`.
double determination(std::span<const double> predicted, std::span<const double> label);

// Error metrics over samples whose label is at least height_floor; r2_all
// uses every sample. iqr_rmse is the IQR of the per-sample absolute errors,
// the per-sample counterpart of RMSE. Throws a data error when fewer than two
// samples pass the floor or a value is negative or non-finite.
MetricReport metric_report(std::span<const PairedSample> samples, double height_floor = 5.0,
                           R2Kind r2_kind = R2Kind::kSquaredPearson);

struct QuartileBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Absolute errors grouped by label into [k w, (k+1) w), from 0 to the highest
// populated bin.
std::vector<QuartileBin> height_binned_errors(std::span<const PairedSample> samples, double bin_width = 5.0);

struct ChangeScatter {
  Grid2<std::uint8_t> disturbed;  // h_end < h_start - threshold
  // Medians of h_end per bin of h_start, over undisturbed pixels.
  std::vector<QuartileBin> bins;
};

ChangeScatter change_scatter(const Grid2<double>& h_start, const Grid2<double>& h_end, double disturb_threshold = 5.0,
                             double bin_width = 1.0);

struct GrowthCurveBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double area_m2 = 0.0;
  // Entry k summarises height[year k+1] - height[year 0].
  std::vector<double> median, q1, q3;
};

// Pixels grouped by first-year height. pixel_area_m2 defaults to a 10 m pixel.
std::vector<GrowthCurveBin> growth_curves(const Grid3<double>& series, double bin_width = 1.0,
                                          double pixel_area_m2 = 100.0);

struct SpatialPoint {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

struct LagBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t pairs = 0;             // unordered point pairs
  std::optional<double> correlation; // empty with < 2 pairs or no variance
};

// Pearson correlation of the values of point pairs grouped by distance into
// [k w, (k+1) w) for distances below max_lag. Each pair enters in both orders,
// so the correlation is symmetric in the two points.
std::vector<LagBin> spatial_autocorrelation(std::span<const SpatialPoint> points, double lag_bin = 50.0,
                                            double max_lag = 1000.0);

// Writers. Tables put the IQR in brackets after the value.
void write_report_csv(std::ostream& out, const MetricReport& r);
void write_report_table(std::ostream& out, const MetricReport& r);
void write_bins_csv(std::ostream& out, std::span<const QuartileBin> bins);
void write_growth_curves_csv(std::ostream& out, std::span<const GrowthCurveBin> bins);
void write_lag_bins_csv(std::ostream& out, std::span<const LagBin> bins);

}  // namespace canopy::eval
