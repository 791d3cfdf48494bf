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

// Batch workflows behind the command line tool. Every command that writes
// files puts them in a run directory together with manifest.json.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "data/synthetic.hpp"
#include "eval/metrics.hpp"
#include "growth/growth.hpp"
#include "json.hpp"
#include "model/config.hpp"
#include "nn/gradcheck.hpp"
#include "training/phase_config.hpp"
#include "training/trainer.hpp"

namespace canopy::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// Unknown keys are rejected; missing keys keep the defaults.
growth::GrowthConfig growth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const growth::GrowthConfig& cfg);

nlohmann::json read_json_file(const fs::path& path);

// Training run file:
//   {"training": {<phase config>}, "model": {<model config>}, "growth": {...}}
// "model" applies to pretraining only (default: desk scale); fine-tuning takes
// the model from its checkpoint. "growth" applies to fine-tuning only.
struct TrainingRunConfig {
  training::PhaseConfig training;
  model::ModelConfig model = model::ModelConfig::desk_scale();
  growth::GrowthConfig growth;
};

TrainingRunConfig training_run_config_from_json(const nlohmann::json& j, training::Phase expected);

struct Manifest {
  std::string command;
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  nlohmann::json parameters = nlohmann::json::object();
  std::string started_at;
};

std::string utc_timestamp();
// Writes run_dir/manifest.json, stamping finished_at.
void write_manifest(const fs::path& run_dir, const Manifest& m);

// Patch files of a directory (patch_*.cnpy), sorted by name.
std::vector<fs::path> list_patches(const fs::path& dir);
training::TrainingSample to_training_sample(const data::SyntheticPatch& p);

struct SynthOptions {
  fs::path config;
  fs::path out_dir;
  std::size_t patches = 1;
  std::uint64_t seed = 0;  // replaces the config's seed
};
std::vector<fs::path> cmd_synth(const SynthOptions& o);

struct TrainOptions {
  fs::path config;
  fs::path data_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::optional<fs::path> resume;
  // Fine-tuning only.
  fs::path checkpoint;
  bool freeze_backbone = false;
  bool quiet = true;
};
// Both return the path of the final checkpoint.
fs::path cmd_pretrain(const TrainOptions& o);
fs::path cmd_finetune(const TrainOptions& o);

struct PredictOptions {
  fs::path checkpoint;
  std::vector<fs::path> patches;
  fs::path out_dir;
};
// One grid container per patch (pred_<stem>.cnpy) holding "reference" and
// "prediction" as f32 [Y, H, W].
std::vector<fs::path> cmd_predict(const PredictOptions& o);

// Series CSV: header y1..yY, one pixel per row. Output: the fitted series
// plus a split_year column.
struct PseudolabelOptions {
  fs::path series_csv;
  std::optional<fs::path> growth_config;
  fs::path out_dir;
};
fs::path cmd_pseudolabel(const PseudolabelOptions& o);

struct DisturbanceSummary {
  std::size_t years = 0;
  // counts[y - 1] = pixels whose pooled index is y (y = Y means undisturbed).
  std::vector<std::size_t> counts;
};

struct DisturbanceOptions {
  fs::path grid;
  std::string array = "reference";
  std::optional<fs::path> growth_config;
  fs::path out_dir;
};
DisturbanceSummary cmd_disturbance(const DisturbanceOptions& o);

struct EvaluateOptions {
  fs::path prediction_grid;
  std::string array = "prediction";
  fs::path patch;
  bool against_truth = false;  // dense truth instead of the sparse labels
  double floor = 5.0;
  double bin_width = 5.0;
  eval::R2Kind r2 = eval::R2Kind::kSquaredPearson;
  fs::path out_dir;
};
eval::MetricReport cmd_evaluate(const EvaluateOptions& o);

struct GradcheckOptions {
  bool linear = false;
  std::optional<fs::path> model_config;  // default: tiny scale
  std::uint64_t seed = 0;
  bool inject_fault = false;
  double tolerance = 1e-4;
};
struct GradcheckReport {
  nn::GradCheckResult result;
  double tolerance = 0.0;
  bool passed = false;
};
GradcheckReport cmd_gradcheck(const GradcheckOptions& o);

// preset: "full", "desk" or "tiny"; a config file wins over the preset.
std::string cmd_describe(const std::string& preset, const std::optional<fs::path>& config);

// Grid container helpers.
void write_grid(const fs::path& path, const std::vector<std::pair<std::string, Grid3<float>>>& arrays,
                const nlohmann::json& metadata = nlohmann::json::object());
Grid3<double> read_grid_array(const fs::path& path, const std::string& name);

}  // namespace canopy::pipeline
