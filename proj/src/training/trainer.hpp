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

// Two-phase training of the temporal Swin U-Net: masked Huber pretraining of
// the reference head, then growth-loss fine-tuning of the prediction head on
// a frozen backbone.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "common/container.hpp"
#include "growth/growth.hpp"
#include "model/swin_unet.hpp"
#include "training/optimizer.hpp"
#include "training/phase_config.hpp"

namespace canopy::training {

using Model = model::TemporalSwinUnet<float>;

struct TrainingSample {
  nn::Tensor<float> input;          // [C, T, H, W]
  std::vector<float> labels;        // Y*H*W, year-major
  std::vector<std::uint8_t> valid;  // Y*H*W
};

// What fine-tuning needs from the frozen backbone for one sample. Everything
// here is constant while the backbone is frozen, so it is computed once.
struct FinetuneTarget {
  nn::Tensor<float> features;      // [Y, H, W, E]
  std::vector<double> reference;   // Y*H*W reference-head output
  growth::DisturbanceMap split;    // pooled disturbance years
  std::vector<double> pseudo;      // Y*H*W pseudo-labels
};

FinetuneTarget prepare_finetune_target(const Model& m, const nn::Tensor<float>& input,
                                       const growth::GrowthConfig& growth);

// Pretraining trains everything except the prediction head; fine-tuning
// trains only the prediction head.
void freeze_for_phase(Model& m, Phase phase);

// Sample indices of a step: epochs are seeded shuffles of 0..n-1, and step s
// takes positions s*batch .. s*batch+batch-1 of their concatenation.
std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t step, std::uint64_t seed);

// One optimizer step; returns the batch loss before the update.
double pretrain_step(Model& m, std::span<const TrainingSample* const> batch, AdamW& opt, const PhaseConfig& cfg,
                     std::size_t step);
double finetune_step(Model& m, std::span<const FinetuneTarget* const> batch, AdamW& opt, const PhaseConfig& cfg,
                     const growth::GrowthConfig& growth, std::size_t step);

// Masked Huber loss of the reference head pooled over all valid voxels of
// `samples`, without building a graph.
double mean_huber_loss(const Model& m, std::span<const TrainingSample> samples, double delta);

// Growth loss of the prediction head against the cached pseudo-labels of
// `target`, divided by `normalizer` (0 = pixels of one sample).
nn::Tensor<float> finetune_loss(const Model& m, const FinetuneTarget& target, const growth::GrowthConfig& growth,
                                double normalizer = 0.0);

// Mean per-pixel growth loss over the targets, without building a graph.
double mean_growth_loss(const Model& m, std::span<const FinetuneTarget> targets,
                        const growth::GrowthConfig& growth);

// Checkpoints hold the model config and parameters ("model.<name>"), and
// optionally the optimizer state and training progress.
Container make_checkpoint(const Model& m, const AdamW* opt, const nlohmann::json& training);
model::ModelConfig checkpoint_model_config(const Container& c);
void restore_model(const Container& c, Model& m);

struct RunOptions {
  std::uint64_t seed = 0;
  // Receives loss.csv and checkpoints; nothing is written when empty.
  std::filesystem::path out_dir;
  // Checkpoint of an interrupted run of the same phase, config and seed.
  std::optional<std::filesystem::path> resume;
  std::function<void(std::size_t step, double loss, double lr)> on_step;
};

struct RunResult {
  std::size_t first_step = 0;
  std::vector<double> losses;  // one per step run
  std::filesystem::path checkpoint;
};

RunResult run_pretrain(Model& m, std::span<const TrainingSample> data, const PhaseConfig& cfg,
                       const RunOptions& options);

// Targets must come from prepare_finetune_target on the same backbone.
RunResult run_finetune(Model& m, std::span<const FinetuneTarget> targets, const PhaseConfig& cfg,
                       const growth::GrowthConfig& growth, const RunOptions& options);

}  // namespace canopy::training
