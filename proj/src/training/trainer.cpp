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

#include "training/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "nn/checkpoint.hpp"
#include "training/losses.hpp"

namespace canopy::training {

namespace {

Grid3<double> as_grid(const std::vector<double>& v, std::size_t Y, std::size_t H, std::size_t W) {
  Grid3<double> g(Y, H, W);
  g.values = v;
  return g;
}

void finish_step(Model& m, AdamW& opt, const PhaseConfig& cfg, std::size_t step) {
  auto& store = m.parameters();
  clip_gradients(store, cfg.grad_clip);
  opt.step(store, lr_at(step, cfg));
  store.zero_grad();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

FinetuneTarget prepare_finetune_target(const Model& m, const nn::Tensor<float>& input,
                                       const growth::GrowthConfig& growth) {
  nn::NoGradGuard ng;
  const auto& cfg = m.config();
  FinetuneTarget t;
  t.features = m.features(input);
  const auto ref = m.reference_head(t.features);
  t.reference.assign(ref.values().begin(), ref.values().end());
  const auto grid = as_grid(t.reference, cfg.years, cfg.height, cfg.width);
  t.split = growth::disturbance_map(grid, growth);
  t.pseudo = growth::pseudo_label_map(grid, t.split, growth).values;
  return t;
}

void freeze_for_phase(Model& m, Phase phase) {
  auto& store = m.parameters();
  if (phase == Phase::kFinetune) {
    store.freeze_all_except({model::kPredictionHeadPrefix});
    return;
  }
  store.unfreeze_all();
  for (auto& p : store.all())
    if (p.name.rfind(model::kPredictionHeadPrefix, 0) == 0) p.tensor.set_requires_grad(false);
}

std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t step, std::uint64_t seed) {
  require(n > 0, "no training samples");
  std::vector<std::size_t> out;
  std::size_t cached_epoch = SIZE_MAX;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t pos = step * batch + i;
    const std::size_t epoch = pos / n;
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)));
      // Fisher-Yates with an explicit draw so the order does not depend on the
      // standard library's shuffle.
      for (std::size_t k = n - 1; k > 0; --k) std::swap(perm[k], perm[rng() % (k + 1)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

double pretrain_step(Model& m, std::span<const TrainingSample* const> batch, AdamW& opt, const PhaseConfig& cfg,
                     std::size_t step) {
  require(!batch.empty(), "empty batch");
  std::size_t valid = 0;
  for (const auto* s : batch)
    for (auto v : s->valid) valid += v != 0;
  if (valid == 0) fail(ErrorKind::kData, "batch at step ", step, " has no valid labels");
  m.parameters().zero_grad();
  double total = 0.0;
  for (const auto* s : batch) {
    const auto ref = m.reference_head(m.features(s->input));
    const auto loss = huber_loss_masked(ref, s->labels, s->valid, cfg.huber_delta, static_cast<double>(valid));
    nn::backward(loss);
    total += loss.item();
  }
  if (!std::isfinite(total)) fail(ErrorKind::kNumerical, "non-finite pretraining loss at step ", step);
  finish_step(m, opt, cfg, step);
  return total;
}

double mean_huber_loss(const Model& m, std::span<const TrainingSample> samples, double delta) {
  std::size_t valid = 0;
  for (const auto& s : samples)
    for (auto v : s.valid) valid += v != 0;
  if (valid == 0) fail(ErrorKind::kData, "no valid labels to evaluate");
  nn::NoGradGuard ng;
  double total = 0.0;
  for (const auto& s : samples)
    total += huber_loss_masked(m.reference_head(m.features(s.input)), s.labels, s.valid, delta,
                               static_cast<double>(valid))
                 .item();
  return total;
}

nn::Tensor<float> finetune_loss(const Model& m, const FinetuneTarget& target, const growth::GrowthConfig& growth,
                                double normalizer) {
  return growth_loss(m.prediction_head(target.features), target.pseudo, growth.norm, normalizer);
}

double finetune_step(Model& m, std::span<const FinetuneTarget* const> batch, AdamW& opt, const PhaseConfig& cfg,
                     const growth::GrowthConfig& growth, std::size_t step) {
  require(!batch.empty(), "empty batch");
  const auto& mc = m.config();
  const double pixels = static_cast<double>(batch.size() * mc.height * mc.width);
  m.parameters().zero_grad();
  double total = 0.0;
  for (const auto* t : batch) {
    const auto loss = finetune_loss(m, *t, growth, pixels);
    nn::backward(loss);
    total += loss.item();
  }
  if (!std::isfinite(total)) fail(ErrorKind::kNumerical, "non-finite fine-tuning loss at step ", step);
  finish_step(m, opt, cfg, step);
  return total;
}

double mean_growth_loss(const Model& m, std::span<const FinetuneTarget> targets,
                        const growth::GrowthConfig& growth) {
  require(!targets.empty(), "no fine-tuning targets");
  nn::NoGradGuard ng;
  double total = 0.0;
  for (const auto& t : targets) total += finetune_loss(m, t, growth).item();
  return total / static_cast<double>(targets.size());
}

Container make_checkpoint(const Model& m, const AdamW* opt, const nlohmann::json& training) {
  Container c;
  c.magic = kCheckpointMagic;
  c.metadata["model"] = model::to_json(m.config());
  c.metadata["parameter_count"] = m.parameters().numel();
  if (!training.is_null()) c.metadata["training"] = training;
  nn::append_parameters(c, m.parameters(), "model.");
  if (opt) opt->save(c);
  return c;
}

model::ModelConfig checkpoint_model_config(const Container& c) {
  if (!c.metadata.contains("model")) fail(ErrorKind::kData, "checkpoint has no model config");
  return model::model_config_from_json(c.metadata.at("model"));
}

void restore_model(const Container& c, Model& m) {
  const auto cfg = checkpoint_model_config(c);
  if (model::to_json(cfg) != model::to_json(m.config()))
    fail(ErrorKind::kData, "checkpoint model config differs from the requested model");
  nn::restore_parameters(c, m.parameters(), "model.");
}

namespace {

template <typename StepFn>
RunResult run_loop(Model& m, Phase phase, std::size_t n, const PhaseConfig& cfg, const RunOptions& options,
                   const nlohmann::json& extra, StepFn&& do_step) {
  require(cfg.phase == phase, "config is for phase ", phase_name(cfg.phase), ", not ", phase_name(phase));
  cfg.validate();
  freeze_for_phase(m, phase);
  AdamW opt(m.parameters(), cfg);

  nlohmann::json training = {{"phase", phase_name(phase)}, {"seed", options.seed}, {"config", to_json(cfg)}};
  for (const auto& [k, v] : extra.items()) training[k] = v;

  RunResult result;
  if (options.resume) {
    const auto c = read_container(*options.resume, kCheckpointMagic);
    if (!c.metadata.contains("training")) fail(ErrorKind::kData, "checkpoint holds no training progress");
    const auto& t = c.metadata.at("training");
    for (const char* key : {"phase", "seed", "config"})
      if (!t.contains(key) || t.at(key) != training.at(key))
        fail(ErrorKind::kData, "cannot resume: checkpoint ", key, " differs from this run");
    restore_model(c, m);
    opt.restore(c);
    result.first_step = t.at("steps_done").get<std::size_t>();
    require(result.first_step <= cfg.total_steps, "checkpoint is past the configured step count");
  }

  const bool write = !options.out_dir.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    const auto path = options.out_dir / "loss.csv";
    const bool append = options.resume && std::filesystem::exists(path);
    log.open(path, append ? std::ios::app : std::ios::trunc);
    if (!log) fail(ErrorKind::kIo, "cannot write ", path.string());
    if (!append) log << "step,phase,loss,lr\n";
  }

  auto save = [&](std::size_t done, const std::filesystem::path& path) {
    auto t = training;
    t["steps_done"] = done;
    write_container(path, make_checkpoint(m, &opt, t));
  };

  for (std::size_t step = result.first_step; step < cfg.total_steps; ++step) {
    const auto idx = batch_indices(n, cfg.batch_size, step, options.seed);
    const double loss = do_step(idx, opt, step);
    const double lr = lr_at(step, cfg);
    result.losses.push_back(loss);
    if (write) {
      log << step << ',' << phase_name(phase) << ',' << format_double(loss) << ',' << format_double(lr) << '\n';
      if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.total_steps)
        save(step + 1, options.out_dir / ("checkpoint_step" + std::to_string(step + 1) + ".cnpy"));
    }
    if (options.on_step) options.on_step(step, loss, lr);
  }
  if (write) {
    log.flush();
    if (!log) fail(ErrorKind::kIo, "failed writing the loss log");
    result.checkpoint = options.out_dir / "checkpoint.cnpy";
    save(cfg.total_steps, result.checkpoint);
  }
  return result;
}

}  // namespace

RunResult run_pretrain(Model& m, std::span<const TrainingSample> data, const PhaseConfig& cfg,
                       const RunOptions& options) {
  require(!data.empty(), "no training samples");
  return run_loop(m, Phase::kPretrain, data.size(), cfg, options, nlohmann::json::object(),
                  [&](const std::vector<std::size_t>& idx, AdamW& opt, std::size_t step) {
                    std::vector<const TrainingSample*> batch;
                    for (auto i : idx) batch.push_back(&data[i]);
                    return pretrain_step(m, batch, opt, cfg, step);
                  });
}

RunResult run_finetune(Model& m, std::span<const FinetuneTarget> targets, const PhaseConfig& cfg,
                       const growth::GrowthConfig& growth, const RunOptions& options) {
  require(!targets.empty(), "no fine-tuning targets");
  growth.validate();
  const nlohmann::json extra = {{"backbone_checksum", nn::checksum_hex(nn::parameter_checksum(
                                                           m.parameters(), {model::kPredictionHeadPrefix}, true))}};
  return run_loop(m, Phase::kFinetune, targets.size(), cfg, options, extra,
                  [&](const std::vector<std::size_t>& idx, AdamW& opt, std::size_t step) {
                    std::vector<const FinetuneTarget*> batch;
                    for (auto i : idx) batch.push_back(&targets[i]);
                    return finetune_step(m, batch, opt, cfg, growth, step);
                  });
}

}  // namespace canopy::training
