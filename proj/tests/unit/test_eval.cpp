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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "common/error.hpp"
#include "doctest.h"
#include "eval/metrics.hpp"
#include "oracles/metrics_oracle.hpp"

using namespace canopy;
using namespace canopy::eval;

namespace {

constexpr double kTol = 1e-9;

bool close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= kTol * std::max(1.0, std::abs(b));
}

double q_oracle(const std::vector<double>& v, double p) { return oracle::quantile(v, p); }
double r_oracle(const std::vector<double>& a, const std::vector<double>& b) { return oracle::pearson(a, b); }

std::vector<PairedSample> random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> h(0.0, 45.0), e(-6.0, 6.0), pos(0.0, 2000.0);
  std::vector<PairedSample> out(n);
  for (auto& s : out) {
    s.label = h(rng);
    s.predicted = std::max(0.0, s.label + e(rng));
    s.x = pos(rng);
    s.y = pos(rng);
  }
  return out;
}

Grid2<double> random_grid(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid2<double> g(r, c);
  for (auto& v : g.values) v = u(rng);
  return g;
}

}  // namespace

TEST_CASE("hand example") {
  std::vector<PairedSample> s(2);
  s[0].label = 10;
  s[0].predicted = 12;
  s[1].label = 20;
  s[1].predicted = 16;
  const auto r = metric_report(s);
  CHECK(r.mae == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.mse == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
  CHECK(r.mape == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(r.n == 2);
}

TEST_CASE("metric_report matches loop oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_samples(3000, seed);
    for (auto kind : {R2Kind::kSquaredPearson, R2Kind::kDetermination}) {
      const auto r = metric_report(s, 5.0, kind);
      std::vector<double> ae, se, pe, p, l, pa, la;
      for (const auto& x : s) {
        pa.push_back(x.predicted);
        la.push_back(x.label);
        if (!(x.label >= 5.0)) continue;
        const double d = x.predicted - x.label;
        ae.push_back(std::fabs(d));
        se.push_back(d * d);
        pe.push_back(std::fabs(d) / x.label * 100.0);
        p.push_back(x.predicted);
        l.push_back(x.label);
      }
      double mae = 0, mse = 0, mape = 0;
      for (std::size_t i = 0; i < ae.size(); ++i) {
        mae += ae[i] / ae.size();
        mse += se[i] / se.size();
        mape += pe[i] / pe.size();
      }
      CHECK(r.n == ae.size());
      CHECK(r.n_all == s.size());
      CHECK(close(r.mae, mae));
      CHECK(close(r.mse, mse));
      CHECK(close(r.rmse, std::sqrt(mse)));
      CHECK(close(r.mape, mape));
      CHECK(close(r.iqr_mae, q_oracle(ae, 0.75) - q_oracle(ae, 0.25)));
      CHECK(close(r.iqr_mse, q_oracle(se, 0.75) - q_oracle(se, 0.25)));
      CHECK(close(r.iqr_mape, q_oracle(pe, 0.75) - q_oracle(pe, 0.25)));
      if (kind == R2Kind::kSquaredPearson) {
        CHECK(close(r.r2, std::pow(r_oracle(p, l), 2)));
        CHECK(close(r.r2_all, std::pow(r_oracle(pa, la), 2)));
      } else {
        double ml = 0;
        for (double v : l) ml += v / l.size();
        double res = 0, tot = 0;
        for (std::size_t i = 0; i < l.size(); ++i) {
          res += std::pow(l[i] - p[i], 2);
          tot += std::pow(l[i] - ml, 2);
        }
        CHECK(close(r.r2, 1 - res / tot));
      }
      CHECK(r.mae <= r.rmse);
      CHECK(r.rmse * r.rmse == doctest::Approx(r.mse).epsilon(1e-12));
    }
  }
}

TEST_CASE("metric_report invariants and errors") {
  auto s = random_samples(500, 9);
  for (auto& x : s) x.predicted = x.label;
  auto r = metric_report(s);
  CHECK(r.mae == 0.0);
  CHECK(r.mse == 0.0);
  CHECK(r.mape == 0.0);
  CHECK(r.r2 == doctest::Approx(1.0));

  for (auto& x : s) x.predicted = x.label + 2.5;
  r = metric_report(s);
  CHECK(r.mae == doctest::Approx(2.5));
  CHECK(r.r2 == doctest::Approx(1.0));

  // Shuffled pairs: correlation collapses.
  auto big = random_samples(10000, 4);
  std::vector<double> preds;
  for (auto& x : big) preds.push_back(x.predicted);
  std::shuffle(preds.begin(), preds.end(), std::mt19937_64(8));
  for (std::size_t i = 0; i < big.size(); ++i) big[i].predicted = preds[i];
  CHECK(metric_report(big).r2 < 0.01);

  std::vector<PairedSample> low(3);
  for (auto& x : low) x.label = 2.0;
  CHECK_THROWS_AS(metric_report(low), Error);
  std::vector<PairedSample> bad(3);
  for (auto& x : bad) x.label = 10.0;
  bad[1].predicted = NAN;
  CHECK_THROWS_AS(metric_report(bad), Error);
}

TEST_CASE("quantile convention") {
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.75) == 5.0);
  CHECK(quantile({4, 1, 3, 2, 5}, 0.75) == 4.0);
}

TEST_CASE("height_binned_errors") {
  std::vector<PairedSample> one(4);
  for (std::size_t i = 0; i < 4; ++i) {
    one[i].label = 6.0 + i;
    one[i].predicted = one[i].label + (i + 1.0);
  }
  auto bins = height_binned_errors(one);
  std::size_t populated = 0;
  for (const auto& b : bins) populated += b.count > 0;
  CHECK(populated == 1);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].count == 0);
  CHECK(std::isnan(bins[0].median));
  CHECK(bins[1].lo == 5.0);
  // Errors 1,2,3,4: quartiles 1.75, 2.5, 3.25.
  CHECK(bins[1].q1 == doctest::Approx(1.75));
  CHECK(bins[1].median == doctest::Approx(2.5));
  CHECK(bins[1].q3 == doctest::Approx(3.25));

  std::vector<PairedSample> edge(1);
  edge[0].label = 5.0;
  bins = height_binned_errors(edge);
  CHECK(bins.back().lo == 5.0);
  CHECK(bins.back().count == 1);

  const auto s = random_samples(4000, 21);
  bins = height_binned_errors(s);
  for (const auto& b : bins) {
    std::vector<double> errs;
    for (const auto& x : s)
      if (x.label >= b.lo && x.label < b.hi) errs.push_back(std::abs(x.predicted - x.label));
    CHECK(b.count == errs.size());
    CHECK(close(b.median, q_oracle(errs, 0.5)));
    CHECK(close(b.q1, q_oracle(errs, 0.25)));
    CHECK(close(b.q3, q_oracle(errs, 0.75)));
  }
}

TEST_CASE("change_scatter") {
  std::mt19937_64 rng(5);
  auto start = random_grid(30, 40, rng, 0.0, 35.0);
  auto same = change_scatter(start, start);
  CHECK(std::none_of(same.disturbed.values.begin(), same.disturbed.values.end(), [](auto v) { return v; }));
  for (const auto& b : same.bins)
    if (b.count) {
      CHECK(b.median >= b.lo);
      CHECK(b.median < b.hi);
    }

  Grid2<double> a(1, 1, 30.0), z(1, 1, 10.0);
  CHECK(change_scatter(a, z).disturbed.at(0, 0) == 1);

  auto end = random_grid(30, 40, rng, 0.0, 35.0);
  const auto cs = change_scatter(start, end);
  for (std::size_t i = 0; i < start.size(); ++i)
    CHECK(static_cast<bool>(cs.disturbed.values[i]) == (end.values[i] < start.values[i] - 5.0));
  for (const auto& b : cs.bins) {
    std::vector<double> v;
    for (std::size_t i = 0; i < start.size(); ++i)
      if (!(end.values[i] < start.values[i] - 5.0) && start.values[i] >= b.lo && start.values[i] < b.hi)
        v.push_back(end.values[i]);
    CHECK(b.count == v.size());
    CHECK(close(b.median, q_oracle(v, 0.5)));
  }

  std::size_t prev = start.size() + 1;
  for (double t : {0.0, 2.0, 5.0, 10.0, 20.0}) {
    const auto r = change_scatter(start, end, t);
    const auto n = static_cast<std::size_t>(std::count(r.disturbed.values.begin(), r.disturbed.values.end(), 1));
    CHECK(n <= prev);
    prev = n;
  }
  CHECK_THROWS_AS(change_scatter(start, Grid2<double>(30, 39)), Error);
}

TEST_CASE("growth_curves") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> h(0.0, 30.0);
  Grid3<double> uniform(4, 10, 10);
  for (std::size_t i = 0; i < 100; ++i) {
    const double h0 = h(rng);
    for (std::size_t y = 0; y < 4; ++y) uniform.values[y * 100 + i] = h0 + y;
  }
  for (const auto& b : growth_curves(uniform)) {
    CHECK(b.area_m2 == doctest::Approx(100.0 * b.count));
    if (!b.count) {
      CHECK(std::isnan(b.median[0]));
      continue;
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(b.median[k] == doctest::Approx(k + 1.0));
  }

  // Slower growth for taller stands.
  Grid3<double> slowing(3, 50, 50);
  for (std::size_t i = 0; i < 2500; ++i) {
    const double h0 = h(rng);
    for (std::size_t y = 0; y < 3; ++y) slowing.values[y * 2500 + i] = h0 + y * (3.0 - h0 / 12.0);
  }
  const auto curves = growth_curves(slowing, 5.0);
  for (std::size_t b = 1; b < curves.size(); ++b)
    if (curves[b].count && curves[b - 1].count) CHECK(curves[b].median[1] < curves[b - 1].median[1]);

  Grid3<double> noisy(4, 12, 12);
  for (auto& v : noisy.values) v = h(rng);
  for (const auto& b : growth_curves(noisy, 2.0)) {
    for (std::size_t y = 1; y < 4; ++y) {
      std::vector<double> d;
      for (std::size_t i = 0; i < 144; ++i)
        if (noisy.values[i] >= b.lo && noisy.values[i] < b.hi) d.push_back(noisy.values[y * 144 + i] - noisy.values[i]);
      CHECK(b.count == d.size());
      CHECK(close(b.median[y - 1], q_oracle(d, 0.5)));
      CHECK(close(b.q1[y - 1], q_oracle(d, 0.25)));
      CHECK(close(b.q3[y - 1], q_oracle(d, 0.75)));
    }
  }
  CHECK_THROWS(growth_curves(Grid3<double>(1, 2, 2)));
}

TEST_CASE("spatial_autocorrelation") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(0.0, 1000.0), v(0.0, 1.0);
  std::vector<SpatialPoint> pts(300);
  for (auto& p : pts) p = {pos(rng), pos(rng), v(rng)};
  const auto bins = spatial_autocorrelation(pts, 50.0, 500.0);
  REQUIRE(bins.size() == 10);
  for (const auto& b : bins) {
    std::vector<double> a, c;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (i == j) continue;
        const double d = std::sqrt(std::pow(pts[i].x - pts[j].x, 2) + std::pow(pts[i].y - pts[j].y, 2));
        if (d >= b.lo && d < b.hi) {
          a.push_back(pts[i].value);
          c.push_back(pts[j].value);
          pairs += i < j;
        }
      }
    CHECK(b.pairs == pairs);
    REQUIRE(b.correlation.has_value());
    CHECK(close(*b.correlation, r_oracle(a, c)));
    // Independent values: within four standard errors of zero.
    CHECK(std::abs(*b.correlation) < 4.0 / std::sqrt(static_cast<double>(b.pairs)));
  }

  // Smooth field: correlation falls with lag.
  for (auto& p : pts) p.value = std::sin(p.x / 300.0) + std::cos(p.y / 250.0);
  const auto smooth = spatial_autocorrelation(pts, 50.0, 600.0);
  CHECK(*smooth.front().correlation > 0.9);
  CHECK(*smooth.back().correlation < *smooth.front().correlation - 0.2);

  std::vector<SpatialPoint> twins{{1, 1, 2.0}, {1, 1, 3.0}};
  const auto t = spatial_autocorrelation(twins, 50.0, 100.0);
  CHECK(t[0].pairs == 1);
  CHECK_FALSE(t[0].correlation.has_value());
  CHECK_THROWS(spatial_autocorrelation(std::vector<SpatialPoint>{{0, 0, 1}}, 50.0, 100.0));
}

TEST_CASE("report writers") {
  std::vector<PairedSample> s(2);
  s[0] = {12, 10};
  s[1] = {16, 20};
  const auto r = metric_report(s);
  std::ostringstream csv, table;
  write_report_csv(csv, r);
  write_report_table(table, r);
  CHECK(csv.str().rfind("metric,value,iqr\nmae,3,", 0) == 0);
  CHECK(table.str().find("MAE           3.000  [1.000]") != std::string::npos);
  CHECK(table.str().find("MAPE %       20.000") != std::string::npos);
  std::ostringstream bins;
  write_bins_csv(bins, height_binned_errors(s));
  CHECK(bins.str().rfind("bin_lo,bin_hi,bin_center,count,median,q1,q3\n", 0) == 0);
}
