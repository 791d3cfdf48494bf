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

#include "data/footprint.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "common/error.hpp"

namespace canopy::data {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kMaxDepth = 15;

// Mass of N(0, sigma^2) on [a, b].
double interval_mass(double sigma, double a, double b) {
  const double s = sigma * std::numbers::sqrt2;
  return 0.5 * (std::erf(b / s) - std::erf(a / s));
}

double density(double sigma, double x, double y) {
  const double v = sigma * sigma;
  return std::exp(-(x * x + y * y) / (2.0 * v)) / (2.0 * std::numbers::pi * v);
}

void check_sigma(double sigma) { require(std::isfinite(sigma) && sigma > 0.0, "footprint: sigma must be positive"); }

void check_rect(const Rect& r) {
  require(std::isfinite(r.x_min) && std::isfinite(r.x_max) && std::isfinite(r.y_min) && std::isfinite(r.y_max),
          "footprint: rectangle bounds must be finite");
  require(r.width() > 0.0 && r.height() > 0.0, "footprint: degenerate rectangle");
}

}  // namespace

double rect_fraction(double sigma, const Rect& r) {
  check_sigma(sigma);
  check_rect(r);
  return interval_mass(sigma, r.x_min, r.x_max) * interval_mass(sigma, r.y_min, r.y_max);
}

double rect_fraction_quadrature(double sigma, const Rect& r, double tolerance) {
  check_sigma(sigma);
  check_rect(r);
  // The inner tolerance is relative; the outer integral is over at most a
  // unit of mass, so this keeps the total error below `tolerance`.
  const double inner_tol = tolerance * 0.1;
  auto inner = [&](double x) {
    return gauss_kronrod<double, 31>::integrate([&](double y) { return density(sigma, x, y); }, r.y_min, r.y_max,
                                                kMaxDepth, inner_tol);
  };
  return gauss_kronrod<double, 31>::integrate(inner, r.x_min, r.x_max, kMaxDepth, tolerance * 0.1);
}

double disc_fraction(double sigma, const Disc& d, double tolerance) {
  check_sigma(sigma);
  require(std::isfinite(d.cx) && std::isfinite(d.cy) && std::isfinite(d.radius), "footprint: disc must be finite");
  require(d.radius > 0.0, "footprint: degenerate disc");
  // Polar coordinates about the disc centre keep the integrand smooth.
  auto ring = [&](double rho) {
    const double angular = gauss_kronrod<double, 31>::integrate(
        [&](double theta) { return density(sigma, d.cx + rho * std::cos(theta), d.cy + rho * std::sin(theta)); }, 0.0,
        2.0 * std::numbers::pi, kMaxDepth, tolerance * 0.1);
    return angular * rho;
  };
  return gauss_kronrod<double, 31>::integrate(ring, 0.0, d.radius, kMaxDepth, tolerance * 0.1);
}

double footprint_fraction(double sigma, const Region& region, double tolerance) {
  check_sigma(sigma);
  require(tolerance > 0.0, "footprint: tolerance must be positive");
  struct Visitor {
    double sigma, tol;
    double operator()(const WholePlane&) const { return 1.0; }
    double operator()(const Rect& r) const { return rect_fraction(sigma, r); }
    double operator()(const Disc& d) const { return disc_fraction(sigma, d, tol); }
  };
  return std::visit(Visitor{sigma, tolerance}, region);
}

double sigma_for_square_fraction(double side, double fraction) {
  require(std::isfinite(side) && side > 0.0, "footprint: square side must be positive");
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::kNumerical, "footprint: no sigma gives a fraction of ", fraction);
  const double h = side / 2.0;
  // Mass decreases monotonically in sigma.
  auto f = [&](double s) { return rect_fraction(s, {-h, -h, h, h}) - fraction; };
  double lo = side * 1e-3, hi = side;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    if (hi > side * 1e12) fail(ErrorKind::kNumerical, "footprint: sigma search diverged");
  }
  while (f(lo) < 0.0) {
    lo *= 0.5;
    if (lo < side * 1e-12) fail(ErrorKind::kNumerical, "footprint: sigma search diverged");
  }
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

}  // namespace canopy::data
