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

#include "nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common/error.hpp"

namespace canopy::nn {

namespace {

double evaluate(const std::function<Tensor<double>()>& loss_fn) {
  NoGradGuard guard;
  const double v = loss_fn().item();
  if (!std::isfinite(v)) fail(ErrorKind::kNumerical, "gradient check: loss evaluated to ", v);
  return v;
}

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor<double>()>& loss_fn, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options) {
  require(options.step > 0.0, "gradient check step must be positive");
  for (const auto& [name, t] : params) {
    require(t.defined() && t.requires_grad(), "gradient check parameter ", name, " must require a gradient");
    t.node()->grad.clear();
  }

  const auto loss = loss_fn();
  if (!std::isfinite(loss.item())) fail(ErrorKind::kNumerical, "gradient check: loss evaluated to ", loss.item());
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& [name, t] : params) {
    if (t.has_grad())
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    else
      analytic.emplace_back(t.numel(), 0.0);
  }

  GradCheckResult result;
  auto record = [&](double a, double b, const std::string& where) {
    const double e = rel_error(a, b, options.floor);
    ++result.checks;
    if (e > result.max_rel_error || result.worst.empty()) {
      result.max_rel_error = e;
      result.worst = where;
    }
  };

  const double h = options.step;
  std::mt19937_64 rng(options.seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto t = params[p].second;
    const std::size_t n = t.numel();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.coords_per_param > 0 && options.coords_per_param < n) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    auto values = t.mutable_values();
    for (auto i : coords) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = evaluate(loss_fn);
      values[i] = saved - h;
      const double down = evaluate(loss_fn);
      values[i] = saved;
      record(analytic[p][i], (up - down) / (2.0 * h), params[p].first + "[" + std::to_string(i) + "]");
    }
  }

  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < options.projections; ++k) {
    std::vector<std::vector<double>> dir(params.size());
    double norm2 = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      dir[p].resize(params[p].second.numel());
      for (auto& v : dir[p]) {
        v = normal(rng);
        norm2 += v * v;
      }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    double directional = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t i = 0; i < dir[p].size(); ++i) {
        dir[p][i] *= inv;
        directional += dir[p][i] * analytic[p][i];
      }

    std::vector<std::vector<double>> saved(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto vals = params[p].second.values();
      saved[p].assign(vals.begin(), vals.end());
    }
    auto shift = [&](double sign) {
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto holder = params[p].second;
        auto vals = holder.mutable_values();
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = saved[p][i] + sign * h * dir[p][i];
      }
    };
    shift(+1.0);
    const double up = evaluate(loss_fn);
    shift(-1.0);
    const double down = evaluate(loss_fn);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto holder = params[p].second;
      auto vals = holder.mutable_values();
      std::copy(saved[p].begin(), saved[p].end(), vals.begin());
    }
    record(directional, (up - down) / (2.0 * h), "projection " + std::to_string(k));
  }
  return result;
}

}  // namespace canopy::nn
