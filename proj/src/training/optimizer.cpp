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

#include "training/optimizer.hpp"

#include <cmath>

#include "common/error.hpp"

namespace canopy::training {

double global_grad_norm(const nn::ParameterStore<float>& store) {
  double sq = 0.0;
  for (const auto& p : store.all()) {
    if (p.frozen() || !p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) {
      if (!std::isfinite(g)) fail(ErrorKind::kNumerical, "non-finite gradient in parameter ", p.name);
      sq += static_cast<double>(g) * g;
    }
  }
  return std::sqrt(sq);
}

double clip_gradients(nn::ParameterStore<float>& store, double bound) {
  require(bound > 0.0, "clip bound must be positive");
  const double norm = global_grad_norm(store);
  if (norm <= bound) return norm;
  const float factor = static_cast<float>(bound / norm);
  for (auto& p : store.all()) {
    if (p.frozen() || !p.tensor.has_grad()) continue;
    float* g = p.tensor.grad_accumulator();
    for (std::size_t i = 0; i < p.tensor.numel(); ++i) g[i] *= factor;
  }
  return norm;
}

AdamW::AdamW(const nn::ParameterStore<float>& store, const PhaseConfig& cfg)
    : beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps), weight_decay_(cfg.weight_decay) {
  for (const auto& p : store.all()) {
    names_.push_back(p.name);
    m_.emplace_back(p.tensor.numel(), 0.0f);
    v_.emplace_back(p.tensor.numel(), 0.0f);
  }
}

void AdamW::step(nn::ParameterStore<float>& store, double lr) {
  auto& params = store.all();
  require(params.size() == names_.size(), "optimizer was built for a different parameter set");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    require(p.name == names_[k], "optimizer state mismatch at ", p.name);
    if (p.frozen()) continue;
    auto w = p.tensor.mutable_values();
    const bool has = p.tensor.has_grad();
    const auto g = p.tensor.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    const double decay = p.decay ? weight_decay_ : 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has ? g[i] : 0.0;
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = (mi / c1) / (std::sqrt(vi / c2) + eps_) + decay * w[i];
      w[i] = static_cast<float>(w[i] - lr * update);
    }
  }
}

void AdamW::save(Container& c) const {
  c.metadata["optimizer"] = {{"steps", t_}, {"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_},
                             {"weight_decay", weight_decay_}};
  for (std::size_t k = 0; k < names_.size(); ++k) {
    const nn::Shape shape{m_[k].size()};
    c.arrays.push_back(ContainerArray::from<float>("optimizer.m." + names_[k], shape, m_[k]));
    c.arrays.push_back(ContainerArray::from<float>("optimizer.v." + names_[k], shape, v_[k]));
  }
}

void AdamW::restore(const Container& c) {
  require(c.metadata.contains("optimizer"), "checkpoint holds no optimizer state");
  t_ = c.metadata.at("optimizer").at("steps").get<std::size_t>();
  for (std::size_t k = 0; k < names_.size(); ++k) {
    for (auto* dst : {&m_[k], &v_[k]}) {
      const std::string name = (dst == &m_[k] ? "optimizer.m." : "optimizer.v.") + names_[k];
      const auto& a = c.get(name);
      const auto src = a.as<float>();
      if (src.size() != dst->size()) fail(ErrorKind::kData, "optimizer state ", name, " has the wrong size");
      dst->assign(src.begin(), src.end());
    }
  }
}

}  // namespace canopy::training
