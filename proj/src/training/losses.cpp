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

#include "training/losses.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "common/error.hpp"

namespace canopy::training {

template <typename T>
nn::Tensor<T> huber_loss_masked(const nn::Tensor<T>& pred, std::span<const float> labels,
                                std::span<const std::uint8_t> valid, double delta, double normalizer) {
  require(labels.size() == pred.numel() && valid.size() == pred.numel(), "huber loss: ", pred.numel(),
          " predictions, ", labels.size(), " labels, ", valid.size(), " mask entries");
  require(delta > 0.0, "huber delta must be positive");
  std::size_t count = 0;
  for (auto v : valid) count += v != 0;
  if (count == 0) fail(ErrorKind::kData, "huber loss: no valid label voxels");
  const double norm = normalizer > 0.0 ? normalizer : static_cast<double>(count);
  double acc = 0.0;
  const auto p = pred.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!valid[i]) continue;
    const double r = static_cast<double>(p[i]) - labels[i];
    const double a = std::abs(r);
    acc += a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
  }
  auto out = nn::make_result<T>(nn::Shape{}, {static_cast<T>(acc / norm)}, {&pred});
  if (out.requires_grad()) {
    std::vector<float> lab(labels.begin(), labels.end());
    std::vector<std::uint8_t> val(valid.begin(), valid.end());
    out.set_backward([pred, lab = std::move(lab), val = std::move(val), delta, norm](std::span<const T> g) {
      T* d = pred.grad_accumulator();
      const auto p = pred.values();
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!val[i]) continue;
        const double r = static_cast<double>(p[i]) - lab[i];
        const double dr = std::abs(r) <= delta ? r : (r > 0 ? delta : -delta);
        d[i] += static_cast<T>(g[0] * dr / norm);
      }
    });
  }
  return out;
}

template <typename T>
nn::Tensor<T> growth_loss(const nn::Tensor<T>& pred, std::span<const double> pseudo, growth::LossNorm norm,
                          double normalizer) {
  require(pred.rank() == 3, "growth loss: prediction must be [Y, H, W], got ", nn::shape_str(pred.shape()));
  require(pseudo.size() == pred.numel(), "growth loss: pseudo-labels and prediction differ in size");
  const std::size_t Y = pred.dim(0), P = pred.dim(1) * pred.dim(2);
  const double n = normalizer > 0.0 ? normalizer : static_cast<double>(P);
  const auto p = pred.values();
  // Per-pixel L2 lengths, kept for the backward pass.
  auto len = std::make_shared<std::vector<double>>(P, 0.0);
  double acc = 0.0;
  for (std::size_t px = 0; px < P; ++px) {
    double s = 0.0;
    for (std::size_t y = 0; y < Y; ++y) {
      const double r = pseudo[y * P + px] - static_cast<double>(p[y * P + px]);
      s += norm == growth::LossNorm::kL2 ? r * r : std::abs(r);
    }
    (*len)[px] = norm == growth::LossNorm::kL2 ? std::sqrt(s) : s;
    acc += (*len)[px] / static_cast<double>(Y);
  }
  auto out = nn::make_result<T>(nn::Shape{}, {static_cast<T>(acc / n)}, {&pred});
  if (out.requires_grad()) {
    std::vector<double> ps(pseudo.begin(), pseudo.end());
    out.set_backward([pred, ps = std::move(ps), len, norm, Y, P, n](std::span<const T> g) {
      T* d = pred.grad_accumulator();
      const auto p = pred.values();
      const double scale = g[0] / (n * static_cast<double>(Y));
      for (std::size_t px = 0; px < P; ++px) {
        const double l = (*len)[px];
        for (std::size_t y = 0; y < Y; ++y) {
          const double r = static_cast<double>(p[y * P + px]) - ps[y * P + px];
          double dr;
          if (norm == growth::LossNorm::kL2)
            dr = l > 0.0 ? r / l : 0.0;
          else
            dr = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
          d[y * P + px] += static_cast<T>(scale * dr);
        }
      }
    });
  }
  return out;
}

template nn::Tensor<float> huber_loss_masked(const nn::Tensor<float>&, std::span<const float>,
                                             std::span<const std::uint8_t>, double, double);
template nn::Tensor<double> huber_loss_masked(const nn::Tensor<double>&, std::span<const float>,
                                              std::span<const std::uint8_t>, double, double);
template nn::Tensor<float> growth_loss(const nn::Tensor<float>&, std::span<const double>, growth::LossNorm, double);
template nn::Tensor<double> growth_loss(const nn::Tensor<double>&, std::span<const double>, growth::LossNorm, double);

}  // namespace canopy::training
