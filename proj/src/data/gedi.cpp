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

#include "data/gedi.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "common/error.hpp"

namespace canopy::data {

FilterResult gedi_quality_filter(const GediShot& s) {
  if (!(std::isfinite(s.rh98) && s.rh98 >= 0.0 && s.rh98 <= 150.0)) return {false, "rh98"};
  if (s.beam_power != BeamPower::kHigh) return {false, "beam_power"};
  if (s.num_modes < 1) return {false, "num_modes"};
  if (s.quality_flag != 1) return {false, "quality_flag"};
  if (s.degrade_flag != 0) return {false, "degrade_flag"};
  if (!(s.sensitivity >= 0.95)) return {false, "sensitivity"};
  return {};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& column, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::kData, "line ", line, ": column ", column, " is not a finite number: '", s, "'");
}

}  // namespace

std::vector<GediShot> read_gedi_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read ", path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  const char* required[] = {"rh98", "beam_power", "num_modes", "quality_flag", "degrade_flag",
                            "sensitivity", "lon_highestreturn", "lat_highestreturn", "year"};
  for (const char* r : required)
    if (!col.count(r)) fail(ErrorKind::kData, path.string(), ": missing column ", r);

  std::vector<GediShot> shots;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      fail(ErrorKind::kData, path.string(), " line ", n, ": expected ", header.size(), " fields, got ", cells.size());
    auto num = [&](const char* c) { return parse_number(cells[col[c]], c, n); };
    GediShot s;
    s.rh98 = num("rh98");
    const auto& beam = cells[col["beam_power"]];
    if (beam == "high")
      s.beam_power = BeamPower::kHigh;
    else if (beam == "low")
      s.beam_power = BeamPower::kLow;
    else
      fail(ErrorKind::kData, path.string(), " line ", n, ": beam_power must be high or low, got '", beam, "'");
    s.num_modes = static_cast<int>(num("num_modes"));
    s.quality_flag = static_cast<int>(num("quality_flag"));
    s.degrade_flag = static_cast<int>(num("degrade_flag"));
    s.sensitivity = num("sensitivity");
    s.lon = num("lon_highestreturn");
    s.lat = num("lat_highestreturn");
    s.year = static_cast<int>(num("year"));
    shots.push_back(s);
  }
  return shots;
}

RasterizeResult rasterize_labels(const std::vector<GediShot>& shots, const GridGeometry& g) {
  require(g.pixel > 0.0 && g.rows > 0 && g.cols > 0 && g.years > 0, "degenerate label grid geometry");
  RasterizeResult res;
  res.labels.heights = Grid3<float>(g.years, g.rows, g.cols, 0.0f);
  res.labels.valid = Grid3<std::uint8_t>(g.years, g.rows, g.cols, 0);
  for (const auto& s : shots) {
    const double c = std::floor((s.lon - g.x0) / g.pixel);
    const double r = std::floor((g.y0 - s.lat) / g.pixel);
    const long yi = static_cast<long>(s.year) - g.first_year;
    if (!(c >= 0 && c < static_cast<double>(g.cols) && r >= 0 && r < static_cast<double>(g.rows)) || yi < 0 ||
        yi >= static_cast<long>(g.years)) {
      ++res.outside;
      continue;
    }
    const auto y = static_cast<std::size_t>(yi), rr = static_cast<std::size_t>(r), cc = static_cast<std::size_t>(c);
    auto& h = res.labels.heights.at(y, rr, cc);
    auto& v = res.labels.valid.at(y, rr, cc);
    if (!v || s.rh98 > h) h = static_cast<float>(s.rh98);
    v = 1;
    ++res.used;
  }
  return res;
}

double terrain_slope_degrees(const Grid2<double>& dem, double pixel, double radius) {
  require(pixel > 0.0 && radius > 0.0, "slope: pixel and radius must be positive");
  require(dem.rows == dem.cols && dem.rows % 2 == 1, "slope: window must be square with odd size");
  const auto reach = static_cast<std::size_t>(std::floor(radius / pixel));
  const std::size_t half = dem.rows / 2;
  if (half < reach)
    fail(ErrorKind::kData, "slope: a ", dem.rows, "x", dem.cols, " window does not cover a ", radius, " m radius");
  // Least squares z = a x + b y + c over the disc, via the normal equations.
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atz = Eigen::Vector3d::Zero();
  for (std::size_t r = 0; r < dem.rows; ++r)
    for (std::size_t c = 0; c < dem.cols; ++c) {
      const double x = (static_cast<double>(c) - static_cast<double>(half)) * pixel;
      const double y = (static_cast<double>(half) - static_cast<double>(r)) * pixel;
      if (x * x + y * y > radius * radius) continue;
      const double z = dem.at(r, c);
      require(std::isfinite(z), "slope: non-finite elevation");
      const Eigen::Vector3d row(x, y, 1.0);
      ata += row * row.transpose();
      atz += row * z;
    }
  const Eigen::Vector3d coef = ata.ldlt().solve(atz);
  return std::atan(std::hypot(coef[0], coef[1])) * 180.0 / std::numbers::pi;
}

bool slope_exclusion(const Grid2<double>& dem, double pixel, double radius, double max_degrees) {
  return terrain_slope_degrees(dem, pixel, radius) > max_degrees;
}

bool urban_exclusion(double urban_fraction) {
  require(urban_fraction >= 0.0 && urban_fraction <= 1.0, "urban fraction must lie in [0, 1], got ", urban_fraction);
  return urban_fraction > 0.10;
}

}  // namespace canopy::data
