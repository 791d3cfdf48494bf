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

#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "common/error.hpp"

namespace canopy::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void summarise(QuartileBin& b, std::vector<double> values) {
  b.count = values.size();
  if (values.empty()) {
    b.median = b.q1 = b.q3 = kNaN;
    return;
  }
  std::sort(values.begin(), values.end());
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
}

// Bins [k w, (k+1) w) covering keys from min(0, lowest) up to the highest.
struct Binning {
  double width;
  long first = 0;
  std::size_t count = 0;

  Binning(std::span<const double> keys, double w) : width(w) {
    require(std::isfinite(w) && w > 0.0, "bin width must be positive");
    if (keys.empty()) return;
    const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
    first = std::min(0L, static_cast<long>(std::floor(*lo / w)));
    count = static_cast<std::size_t>(static_cast<long>(std::floor(*hi / w)) - first + 1);
  }
  std::size_t index(double key) const { return static_cast<std::size_t>(static_cast<long>(std::floor(key / width)) - first); }
  double lo(std::size_t i) const { return static_cast<double>(first + static_cast<long>(i)) * width; }
};

void check_finite(const Grid2<double>& g, const char* what) {
  for (double v : g.values)
    if (!std::isfinite(v)) fail(ErrorKind::kData, what, " holds a non-finite height");
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double quantile(std::vector<double> v, double p) {
  require(!v.empty(), "quantile of an empty set");
  require(p >= 0.0 && p <= 1.0, "quantile level outside [0, 1]");
  if (!std::is_sorted(v.begin(), v.end())) std::sort(v.begin(), v.end());
  const double h = static_cast<double>(v.size() - 1) * p;
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (h - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, "correlation needs two equal-length series of at least 2 values");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

double squared_pearson(std::span<const double> a, std::span<const double> b) {
  const double r = pearson(a, b);
  return r * r;
}

double determination(std::span<const double> predicted, std::span<const double> label) {
  require(predicted.size() == label.size() && label.size() >= 2, "R^2 needs at least 2 paired values");
  const double m = mean(label);
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    res += (label[i] - predicted[i]) * (label[i] - predicted[i]);
    tot += (label[i] - m) * (label[i] - m);
  }
  if (tot == 0.0) return kNaN;
  return 1.0 - res / tot;
}

MetricReport metric_report(std::span<const PairedSample> samples, double height_floor, R2Kind kind) {
  require(std::isfinite(height_floor) && height_floor > 0.0, "height floor must be positive");
  std::vector<double> pred_all, label_all, pred, label, ae, se, pe;
  for (const auto& s : samples) {
    if (!(std::isfinite(s.predicted) && std::isfinite(s.label) && s.predicted >= 0.0 && s.label >= 0.0))
      fail(ErrorKind::kData, "evaluation pairs must be finite and non-negative, got predicted ", s.predicted,
           " label ", s.label);
    pred_all.push_back(s.predicted);
    label_all.push_back(s.label);
    if (s.label < height_floor) continue;
    const double e = s.predicted - s.label;
    pred.push_back(s.predicted);
    label.push_back(s.label);
    ae.push_back(std::abs(e));
    se.push_back(e * e);
    pe.push_back(100.0 * std::abs(e) / s.label);
  }
  if (pred.size() < 2)
    fail(ErrorKind::kData, "metric report needs at least 2 samples with label >= ", height_floor, ", got ",
         pred.size());
  auto r2 = [&](std::span<const double> p, std::span<const double> l) {
    return kind == R2Kind::kSquaredPearson ? squared_pearson(p, l) : determination(p, l);
  };
  auto iqr = [](const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); };
  MetricReport r;
  r.r2_kind = kind;
  r.n = pred.size();
  r.n_all = samples.size();
  r.mae = mean(ae);
  r.mse = mean(se);
  r.rmse = std::sqrt(r.mse);
  r.mape = mean(pe);
  r.r2 = r2(pred, label);
  r.r2_all = r2(pred_all, label_all);
  r.iqr_mae = iqr(ae);
  r.iqr_mse = iqr(se);
  r.iqr_rmse = r.iqr_mae;
  r.iqr_mape = iqr(pe);
  return r;
}

std::vector<QuartileBin> height_binned_errors(std::span<const PairedSample> samples, double bin_width) {
  std::vector<double> keys;
  for (const auto& s : samples) {
    if (!(std::isfinite(s.predicted) && std::isfinite(s.label) && s.label >= 0.0))
      fail(ErrorKind::kData, "evaluation pairs must be finite with non-negative labels");
    keys.push_back(s.label);
  }
  const Binning bins(keys, bin_width);
  std::vector<std::vector<double>> groups(bins.count);
  for (const auto& s : samples) groups[bins.index(s.label)].push_back(std::abs(s.predicted - s.label));
  std::vector<QuartileBin> out(bins.count);
  for (std::size_t i = 0; i < bins.count; ++i) {
    out[i].lo = bins.lo(i);
    out[i].hi = bins.lo(i) + bin_width;
    summarise(out[i], std::move(groups[i]));
  }
  return out;
}

ChangeScatter change_scatter(const Grid2<double>& h_start, const Grid2<double>& h_end, double threshold,
                             double bin_width) {
  if (h_start.rows != h_end.rows || h_start.cols != h_end.cols)
    fail(ErrorKind::kData, "change scatter: grids ", h_start.rows, "x", h_start.cols, " and ", h_end.rows, "x",
         h_end.cols, " differ");
  require(std::isfinite(threshold) && threshold >= 0.0, "change scatter: threshold must be non-negative");
  check_finite(h_start, "start grid");
  check_finite(h_end, "end grid");
  ChangeScatter out;
  out.disturbed = Grid2<std::uint8_t>(h_start.rows, h_start.cols, 0);
  std::vector<double> keys;
  for (std::size_t i = 0; i < h_start.size(); ++i) {
    out.disturbed.values[i] = h_end.values[i] < h_start.values[i] - threshold;
    if (!out.disturbed.values[i]) keys.push_back(h_start.values[i]);
  }
  const Binning bins(keys, bin_width);
  std::vector<std::vector<double>> groups(bins.count);
  for (std::size_t i = 0; i < h_start.size(); ++i)
    if (!out.disturbed.values[i]) groups[bins.index(h_start.values[i])].push_back(h_end.values[i]);
  out.bins.resize(bins.count);
  for (std::size_t i = 0; i < bins.count; ++i) {
    out.bins[i].lo = bins.lo(i);
    out.bins[i].hi = bins.lo(i) + bin_width;
    summarise(out.bins[i], std::move(groups[i]));
  }
  return out;
}

std::vector<GrowthCurveBin> growth_curves(const Grid3<double>& series, double bin_width, double pixel_area_m2) {
  require(series.depth >= 2, "growth curves need at least 2 years");
  require(series.values.size() == series.depth * series.plane(), "malformed height series grid");
  for (double v : series.values)
    if (!std::isfinite(v)) fail(ErrorKind::kData, "growth curves: non-finite height");
  const std::size_t P = series.plane(), Y = series.depth;
  const std::span<const double> first(series.values.data(), P);
  const Binning bins(first, bin_width);
  std::vector<std::vector<std::size_t>> members(bins.count);
  for (std::size_t i = 0; i < P; ++i) members[bins.index(first[i])].push_back(i);
  std::vector<GrowthCurveBin> out(bins.count);
  for (std::size_t b = 0; b < bins.count; ++b) {
    auto& o = out[b];
    o.lo = bins.lo(b);
    o.hi = o.lo + bin_width;
    o.count = members[b].size();
    o.area_m2 = static_cast<double>(o.count) * pixel_area_m2;
    for (std::size_t y = 1; y < Y; ++y) {
      std::vector<double> diff;
      for (std::size_t i : members[b]) diff.push_back(series.values[y * P + i] - first[i]);
      QuartileBin q;
      summarise(q, std::move(diff));
      o.median.push_back(q.median);
      o.q1.push_back(q.q1);
      o.q3.push_back(q.q3);
    }
  }
  return out;
}

std::vector<LagBin> spatial_autocorrelation(std::span<const SpatialPoint> points, double lag_bin, double max_lag) {
  require(points.size() >= 2, "autocorrelation needs at least 2 points");
  require(std::isfinite(lag_bin) && lag_bin > 0.0 && std::isfinite(max_lag) && max_lag > 0.0,
          "autocorrelation: lag bin and max lag must be positive");
  for (const auto& p : points)
    if (!(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.value)))
      fail(ErrorKind::kData, "autocorrelation: non-finite point");
  const auto nbins = static_cast<std::size_t>(std::ceil(max_lag / lag_bin));
  // Per bin: pair count, sums over both orders of (a, b).
  struct Acc {
    std::size_t pairs = 0;
    std::vector<double> a, b;
  };
  std::vector<Acc> acc(nbins);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
      if (d >= max_lag) continue;
      const auto k = static_cast<std::size_t>(std::floor(d / lag_bin));
      if (k >= nbins) continue;
      auto& a = acc[k];
      ++a.pairs;
      a.a.push_back(points[i].value);
      a.b.push_back(points[j].value);
      a.a.push_back(points[j].value);
      a.b.push_back(points[i].value);
    }
  std::vector<LagBin> out(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    out[k].lo = static_cast<double>(k) * lag_bin;
    out[k].hi = std::min(max_lag, out[k].lo + lag_bin);
    out[k].pairs = acc[k].pairs;
    if (acc[k].pairs >= 2) {
      const double r = pearson(acc[k].a, acc[k].b);
      if (std::isfinite(r)) out[k].correlation = r;
    }
  }
  return out;
}

void write_report_csv(std::ostream& out, const MetricReport& r) {
  out << "metric,value,iqr\n";
  out << "mae," << num(r.mae) << ',' << num(r.iqr_mae) << '\n';
  out << "mse," << num(r.mse) << ',' << num(r.iqr_mse) << '\n';
  out << "rmse," << num(r.rmse) << ',' << num(r.iqr_rmse) << '\n';
  out << "mape," << num(r.mape) << ',' << num(r.iqr_mape) << '\n';
  out << "r2," << num(r.r2) << ",\n";
  out << "r2_all," << num(r.r2_all) << ",\n";
  out << "n," << r.n << ",\n";
  out << "n_all," << r.n_all << ",\n";
}

void write_report_table(std::ostream& out, const MetricReport& r) {
  char line[128];
  auto row = [&](const char* name, double v, const double* iqr) {
    if (iqr)
      std::snprintf(line, sizeof line, "%-8s %10.3f  [%.3f]\n", name, v, *iqr);
    else
      std::snprintf(line, sizeof line, "%-8s %10.3f\n", name, v);
    out << line;
  };
  std::snprintf(line, sizeof line, "%-8s %10s  %s\n", "metric", "value", "[IQR]");
  out << line;
  row("MAE", r.mae, &r.iqr_mae);
  row("MSE", r.mse, &r.iqr_mse);
  row("RMSE", r.rmse, &r.iqr_rmse);
  row("MAPE %", r.mape, &r.iqr_mape);
  row("R2", r.r2, nullptr);
  row("R2_all", r.r2_all, nullptr);
  std::snprintf(line, sizeof line, "%-8s %10zu\n", "n", r.n);
  out << line;
}

void write_bins_csv(std::ostream& out, std::span<const QuartileBin> bins) {
  out << "bin_lo,bin_hi,bin_center,count,median,q1,q3\n";
  for (const auto& b : bins)
    out << num(b.lo) << ',' << num(b.hi) << ',' << num(0.5 * (b.lo + b.hi)) << ',' << b.count << ','
        << num(b.median) << ',' << num(b.q1) << ',' << num(b.q3) << '\n';
}

void write_growth_curves_csv(std::ostream& out, std::span<const GrowthCurveBin> bins) {
  out << "bin_lo,bin_hi,bin_center,count,area_m2,year,median,q1,q3\n";
  for (const auto& b : bins)
    for (std::size_t k = 0; k < b.median.size(); ++k)
      out << num(b.lo) << ',' << num(b.hi) << ',' << num(0.5 * (b.lo + b.hi)) << ',' << b.count << ','
          << num(b.area_m2) << ',' << k + 2 << ',' << num(b.median[k]) << ',' << num(b.q1[k]) << ','
          << num(b.q3[k]) << '\n';
}

void write_lag_bins_csv(std::ostream& out, std::span<const LagBin> bins) {
  out << "lag_lo,lag_hi,lag_center,pairs,correlation\n";
  for (const auto& b : bins) {
    out << num(b.lo) << ',' << num(b.hi) << ',' << num(0.5 * (b.lo + b.hi)) << ',' << b.pairs << ',';
    if (b.correlation) out << num(*b.correlation);
    out << '\n';
  }
}

}  // namespace canopy::eval
