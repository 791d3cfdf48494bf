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

#include "training/phase_config.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "common/error.hpp"

namespace canopy::training {

std::string phase_name(Phase phase) { return phase == Phase::kPretrain ? "pretrain" : "finetune"; }

void PhaseConfig::validate() const {
  require(warmup_fraction > 0.0 && warmup_fraction < 1.0, "warmup_fraction must lie in (0, 1), got ", warmup_fraction);
  require(total_steps > 0, "total_steps must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(grad_clip > 0.0, "grad_clip must be positive, got ", grad_clip);
  require(max_lr > 0.0 && std::isfinite(max_lr), "max_lr must be positive and finite");
  require(huber_delta > 0.0, "huber_delta must be positive, got ", huber_delta);
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must lie in [0, 1)");
  require(eps > 0.0, "eps must be positive");
}

PhaseConfig PhaseConfig::pretrain_defaults() { return {}; }

PhaseConfig PhaseConfig::finetune_defaults() {
  PhaseConfig c;
  c.phase = Phase::kFinetune;
  c.max_lr = 3e-3;
  c.batch_size = 8;
  return c;
}

PhaseConfig phase_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "phase config must be a JSON object");
  static const std::set<std::string> keys = {"phase", "max_lr", "warmup_fraction", "total_steps", "batch_size",
                                             "grad_clip", "huber_delta", "weight_decay", "beta1", "beta2", "eps",
                                             "checkpoint_every"};
  for (const auto& [k, v] : j.items()) require(keys.count(k) == 1, "unknown phase config key '", k, "'");
  require(j.contains("phase"), "phase config needs \"phase\": \"pretrain\" or \"finetune\"");
  const auto name = j.at("phase").get<std::string>();
  require(name == "pretrain" || name == "finetune", "unknown phase '", name, "'");
  PhaseConfig c = name == "pretrain" ? PhaseConfig::pretrain_defaults() : PhaseConfig::finetune_defaults();
  try {
    if (j.contains("max_lr")) c.max_lr = j.at("max_lr").get<double>();
    if (j.contains("warmup_fraction")) c.warmup_fraction = j.at("warmup_fraction").get<double>();
    if (j.contains("total_steps")) c.total_steps = j.at("total_steps").get<std::size_t>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("grad_clip")) c.grad_clip = j.at("grad_clip").get<double>();
    if (j.contains("huber_delta")) c.huber_delta = j.at("huber_delta").get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, "phase config: ", e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const PhaseConfig& c) {
  return {{"phase", phase_name(c.phase)}, {"max_lr", c.max_lr},           {"warmup_fraction", c.warmup_fraction},
          {"total_steps", c.total_steps}, {"batch_size", c.batch_size},   {"grad_clip", c.grad_clip},
          {"huber_delta", c.huber_delta}, {"weight_decay", c.weight_decay}, {"beta1", c.beta1},
          {"beta2", c.beta2},             {"eps", c.eps},                 {"checkpoint_every", c.checkpoint_every}};
}

double lr_at(std::size_t step, const PhaseConfig& cfg) {
  require(step < cfg.total_steps, "step ", step, " outside 0..", cfg.total_steps - 1);
  const double total = static_cast<double>(cfg.total_steps);
  const double warm = cfg.warmup_fraction * total;
  const double s = static_cast<double>(step);
  if (s < warm) return cfg.max_lr * s / warm;
  const double progress = (s - warm) / (total - warm);
  return cfg.max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace canopy::training
