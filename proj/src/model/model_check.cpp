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

#include "model/model_check.hpp"

#include <random>

namespace canopy::model {

namespace {

using TD = nn::Tensor<double>;

TD normal(std::mt19937_64& rng, nn::Shape shape, double scale, bool grad = false) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(nn::shape_numel(shape));
  for (auto& x : v) x = n(rng);
  return TD::from_vector(std::move(shape), std::move(v), grad);
}

}  // namespace

nn::GradCheckResult model_grad_check(TemporalSwinUnet<double>& m, const nn::GradCheckOptions& options) {
  const auto& cfg = m.config();
  std::mt19937_64 rng(options.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xv(cfg.channels * cfg.timesteps * cfg.height * cfg.width);
  for (auto& v : xv) v = u(rng);
  const auto x = TD::from_vector({cfg.channels, cfg.timesteps, cfg.height, cfg.width}, std::move(xv));
  const nn::Shape out{cfg.years, cfg.height, cfg.width};
  const auto wr = normal(rng, out, 1.0);
  const auto wp = normal(rng, out, 1.0);

  std::vector<nn::NamedTensor> params;
  for (const auto& p : m.parameters().all()) params.emplace_back(p.name, p.tensor);
  return nn::grad_check(
      [&] {
        const auto o = m.forward(x);
        return nn::add(nn::sum(nn::mul(o.reference, wr)), nn::sum(nn::mul(o.prediction, wp)));
      },
      params, options);
}

nn::GradCheckResult model_grad_check(const ModelConfig& cfg, const nn::GradCheckOptions& options) {
  TemporalSwinUnet<double> m(cfg, options.seed);
  return model_grad_check(m, options);
}

nn::GradCheckResult linear_grad_check(const nn::GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  const auto x = normal(rng, {5, 4}, 1.0);
  const auto w = normal(rng, {4, 3}, 0.5, true);
  const auto b = normal(rng, {3}, 0.5, true);
  const auto y = normal(rng, {5, 3}, 1.0);
  return nn::grad_check(
      [&] {
        const auto d = nn::sub(nn::linear(x, w, b), y);
        return nn::sum(nn::mul(d, d));
      },
      {{"weight", w}, {"bias", b}}, options);
}

}  // namespace canopy::model
