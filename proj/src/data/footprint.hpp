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

// Share of a GEDI pulse's energy that falls inside a region, for an isotropic
// Gaussian photon density centred at the origin.

#pragma once

#include <variant>

#include "data/split.hpp"

namespace canopy::data {

struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

struct WholePlane {};

using Region = std::variant<WholePlane, Rect, Disc>;

// Rectangles use the closed form (product of 1D interval masses), discs an
// adaptive 2D quadrature to absolute tolerance `tolerance`.
double footprint_fraction(double sigma, const Region& region, double tolerance = 1e-6);

// Closed-form rectangle mass.
double rect_fraction(double sigma, const Rect& rect);

// Adaptive nested quadrature over the rectangle, independent of the closed
// form. Used to cross-check it.
double rect_fraction_quadrature(double sigma, const Rect& rect, double tolerance = 1e-6);

double disc_fraction(double sigma, const Disc& disc, double tolerance = 1e-6);

// Sigma for which a centred square of side `side` holds `fraction` of the
// energy. Throws when fraction is outside (0, 1).
double sigma_for_square_fraction(double side, double fraction);

}  // namespace canopy::data
