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

// Command line front end. Talks to the library only through its C interface.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "canopy/canopy.h"

namespace {

namespace fs = std::filesystem;

constexpr int kUsage = 1;

const char* kWorldSchema = R"(World config (JSON object, unknown keys rejected):
  rows, cols               grid size in pixels (48)
  years                    label years Y, input has 12 Y monthly steps (3)
  first_year               calendar year of year 1 (2018)
  slope_min, slope_max     growth range in m/yr, within [0, 3] (0.5, 2.5)
  initial_min, initial_max first-year heights in m, min >= 8 (12, 30)
  disturbance_probability  chance that a stand is cleared once (0.25)
  residual_min/max         post-disturbance height in m before capping (0, 4)
  noise_std                channel noise in normalised units (0.02)
  label_sparsity           share of (pixel, year) sites without a label (0.9)
  stand_size               stand side in pixels (8)
  seed                     replaced by --seed)";

const char* kTrainSchema = R"(Training config (JSON object, unknown keys rejected):
  training  phase config; "phase" is required ("pretrain" or "finetune")
            max_lr, warmup_fraction, total_steps, batch_size, grad_clip,
            huber_delta, weight_decay, beta1, beta2, eps, checkpoint_every
  model     pretraining only; channels, timesteps, height, width, years,
            embed_dim, depths_enc, depths_dec, heads, window_t, window_s,
            reduce_time, ffn_ratio, norm_groups, output_scale
            (absent: desk scale; keys missing from a given section take
            full-scale values)
  growth    fine-tuning only; s_min, s_max, drop_fraction, drop_absolute,
            low_threshold, pool_size, norm ("l1" or "l2"))";

const char* kGrowthSchema = R"(Growth config (JSON object, unknown keys rejected):
  s_min, s_max (0, 3 m/yr), drop_fraction (0.5), drop_absolute (4 m),
  low_threshold (10 m), pool_size (3), norm ("l2" or "l1"))";

struct Context {
  canopy_context* ctx = canopy_context_new();
  ~Context() { canopy_context_free(ctx); }
};

int report(const Context& c, canopy_status s) {
  if (s != CANOPY_OK) std::fprintf(stderr, "error: %s\n", canopy_last_error(c.ctx));
  return static_cast<int>(s);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::vector<double> parse_list(const std::string& s, std::size_t n, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "'" + s + "' is not a list of " + std::to_string(n) + " numbers");
    }
  }
  if (out.size() != n)
    throw CLI::ValidationError(what, "'" + s + "' must hold " + std::to_string(n) + " comma-separated numbers");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canopy: temporal canopy height models on synthetic forest patches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", canopy_version());

  Context c;
  std::uint64_t seed = 0;
  std::string config, out, data, checkpoint, resume, growth_config;
  bool verbose = false;
  int status = 0;

  // synth
  std::size_t patches = 1;
  auto* synth = app.add_subcommand("synth", "Generate synthetic patches");
  synth->footer(kWorldSchema);
  synth->add_option("--config", config, "World config JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--patches", patches, "Number of patches")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->callback([&] { status = report(c, canopy_synth(c.ctx, config.c_str(), out.c_str(), patches, seed)); });

  // pretrain / finetune
  bool freeze = false;
  auto train = [&](bool finetune) {
    canopy_train_options o;
    canopy_train_options_init(&o);
    o.config_path = config.c_str();
    o.data_dir = data.c_str();
    o.out_dir = out.c_str();
    o.seed = seed;
    o.resume_path = opt(resume);
    o.checkpoint_path = opt(checkpoint);
    o.freeze_backbone = freeze ? 1 : 0;
    o.verbose = verbose ? 1 : 0;
    char* path = nullptr;
    const auto s = finetune ? canopy_finetune(c.ctx, &o, &path) : canopy_pretrain(c.ctx, &o, &path);
    if (s == CANOPY_OK) std::printf("checkpoint %s\n", path);
    canopy_string_free(path);
    return report(c, s);
  };
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain on sparse labels with the masked Huber loss");
  pretrain->footer(kTrainSchema);
  auto* finetune = app.add_subcommand("finetune", "Fine-tune the prediction head with the growth loss");
  finetune->footer(kTrainSchema);
  for (auto* cmd : {pretrain, finetune}) {
    cmd->add_option("--config", config, "Training config JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "Directory of patch_*.cnpy files")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out, "Run directory")->required();
    cmd->add_option("--seed", seed, "Random seed")->required();
    cmd->add_option("--resume", resume, "Checkpoint of an interrupted run")->check(CLI::ExistingFile);
    cmd->add_flag("--verbose", verbose, "Report progress on stderr");
  }
  finetune->add_option("--checkpoint", checkpoint, "Pretrained checkpoint")->required()->check(CLI::ExistingFile);
  finetune->add_flag("--freeze-backbone", freeze, "Confirm that everything but the prediction head stays frozen");
  pretrain->callback([&] { status = train(false); });
  finetune->callback([&] { status = train(true); });

  // predict
  std::vector<std::string> patch_files;
  auto* predict = app.add_subcommand("predict", "Run a checkpoint on patches and write height grids");
  predict->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  auto* patch_opt = predict->add_option("--patch", patch_files, "Patch file (repeatable)")->check(CLI::ExistingFile);
  predict->add_option("--data", data, "Directory of patch_*.cnpy files")
      ->excludes(patch_opt)
      ->check(CLI::ExistingDirectory);
  predict->add_option("--out", out, "Output directory")->required();
  predict->callback([&] {
    if (!data.empty())
      for (const auto& e : fs::directory_iterator(data)) {
        const auto name = e.path().filename().string();
        if (name.rfind("patch_", 0) == 0 && e.path().extension() == ".cnpy") patch_files.push_back(e.path().string());
      }
    std::sort(patch_files.begin(), patch_files.end());
    if (patch_files.empty()) throw CLI::ValidationError("predict", "give --patch files or a --data directory");
    std::vector<const char*> ptrs;
    for (const auto& p : patch_files) ptrs.push_back(p.c_str());
    status = report(c, canopy_predict(c.ctx, checkpoint.c_str(), ptrs.data(), ptrs.size(), out.c_str()));
  });

  // pseudolabel
  std::string series;
  auto* pseudo = app.add_subcommand("pseudolabel", "Fit growth-consistent pseudo-labels to height series");
  pseudo->footer(std::string("Series CSV: header y1..yY, one pixel per row.\n") + kGrowthSchema);
  pseudo->add_option("--series", series, "Height series CSV")->required()->check(CLI::ExistingFile);
  pseudo->add_option("--growth-config", growth_config, "Growth config JSON")->check(CLI::ExistingFile);
  pseudo->add_option("--out", out, "Output directory")->required();
  pseudo->callback([&] {
    status = report(c, canopy_pseudolabel(c.ctx, series.c_str(), opt(growth_config), out.c_str()));
    if (status == 0) std::printf("wrote %s\n", (fs::path(out) / "pseudo_labels.csv").string().c_str());
  });

  // disturbance
  std::string grid, array;
  auto* dist = app.add_subcommand("disturbance", "Pooled disturbance map of a [Y, H, W] height grid");
  dist->footer(kGrowthSchema);
  dist->add_option("--grid", grid, "Grid or patch container")->required()->check(CLI::ExistingFile);
  dist->add_option("--array", array, "Array to analyse (default: reference)");
  dist->add_option("--growth-config", growth_config, "Growth config JSON")->check(CLI::ExistingFile);
  dist->add_option("--out", out, "Output directory")->required();
  dist->callback([&] {
    std::vector<size_t> counts(4096);
    size_t years = 0;
    status = report(c, canopy_disturbance(c.ctx, grid.c_str(), opt(array), opt(growth_config), out.c_str(),
                                          counts.data(), counts.size(), &years));
    if (status != 0) return;
    std::printf("year  pixels\n");
    for (size_t y = 0; y < years; ++y)
      std::printf("%4zu  %zu%s\n", y + 1, counts[y], y + 1 == years ? "  (no disturbance)" : "");
  });

  // evaluate
  std::string pred, patch, against = "labels", r2 = "pearson";
  double floor = 5.0, bins = 5.0;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics of predicted heights against patch labels");
  evaluate->add_option("--pred", pred, "Prediction grid")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--array", array, "Grid array (default: prediction)");
  evaluate->add_option("--patch", patch, "Patch with labels")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--against", against, "labels or truth")->check(CLI::IsMember({"labels", "truth"}));
  evaluate->add_option("--floor", floor, "Height floor in m")->check(CLI::PositiveNumber);
  evaluate->add_option("--bins", bins, "Height bin width in m")->check(CLI::PositiveNumber);
  evaluate->add_option("--r2", r2, "pearson or determination")->check(CLI::IsMember({"pearson", "determination"}));
  evaluate->add_option("--out", out, "Output directory")->required();
  evaluate->callback([&] {
    canopy_evaluate_options o;
    canopy_evaluate_options_init(&o);
    o.prediction_grid = pred.c_str();
    if (!array.empty()) o.array = array.c_str();
    o.patch_path = patch.c_str();
    o.against_truth = against == "truth";
    o.floor = floor;
    o.bin_width = bins;
    o.r2 = r2 == "pearson" ? CANOPY_R2_PEARSON : CANOPY_R2_DETERMINATION;
    o.out_dir = out.c_str();
    canopy_metric_report r{};
    status = report(c, canopy_evaluate(c.ctx, &o, &r));
    if (status != 0) return;
    std::ifstream table(fs::path(out) / "report.txt");
    std::cout << table.rdbuf();
  });

  // footprint
  double sigma = 0.0, target = 0.0, side = 10.0, square = 0.0;
  std::string rect, disc;
  bool plane = false;
  auto* foot = app.add_subcommand("footprint", "Share of a Gaussian pulse's energy inside a region");
  auto* sigma_opt = foot->add_option("--sigma", sigma, "Pulse std in m")->check(CLI::PositiveNumber);
  auto* solve_opt = foot->add_option("--solve-center-fraction", target,
                                     "Solve sigma so a centred square of --side m holds this fraction");
  sigma_opt->excludes(solve_opt);
  foot->add_option("--side", side, "Side of the square used by --solve-center-fraction")->check(CLI::PositiveNumber);
  auto* rect_opt = foot->add_option("--rect", rect, "x_min,y_min,x_max,y_max");
  auto* disc_opt = foot->add_option("--disc", disc, "cx,cy,radius");
  auto* square_opt = foot->add_option("--square", square, "Centred square side")->check(CLI::PositiveNumber);
  auto* plane_opt = foot->add_flag("--plane", plane, "Whole plane");
  for (auto* a : {rect_opt, disc_opt, square_opt, plane_opt})
    for (auto* b : {rect_opt, disc_opt, square_opt, plane_opt})
      if (a != b) a->excludes(b);
  foot->callback([&] {
    if (sigma_opt->count() + solve_opt->count() != 1)
      throw CLI::ValidationError("footprint", "give exactly one of --sigma and --solve-center-fraction");
    if (solve_opt->count()) {
      status = report(c, canopy_footprint_solve_sigma(c.ctx, side, target, &sigma));
      if (status != 0) return;
      std::printf("sigma %.9g\n", sigma);
    }
    double f = 0.0;
    canopy_status s = CANOPY_OK;
    if (rect_opt->count()) {
      const auto v = parse_list(rect, 4, "--rect");
      s = canopy_footprint_rect(c.ctx, sigma, v[0], v[1], v[2], v[3], &f);
    } else if (disc_opt->count()) {
      const auto v = parse_list(disc, 3, "--disc");
      s = canopy_footprint_disc(c.ctx, sigma, v[0], v[1], v[2], &f);
    } else if (square_opt->count()) {
      s = canopy_footprint_rect(c.ctx, sigma, -square / 2, -square / 2, square / 2, square / 2, &f);
    } else if (plane) {
      s = canopy_footprint_plane(c.ctx, sigma, &f);
    } else if (solve_opt->count()) {
      return;
    } else {
      throw CLI::ValidationError("footprint", "give a region: --rect, --disc, --square or --plane");
    }
    status = report(c, s);
    if (status == 0) std::printf("fraction %.9g\n", f);
  });

  // gradcheck
  bool linear = false, inject = false;
  double tolerance = 0.0;
  auto* gc = app.add_subcommand("gradcheck", "64-bit finite-difference check of the model gradients");
  gc->add_option("--config", config, "Model config JSON (default: tiny scale)")->check(CLI::ExistingFile);
  gc->add_flag("--linear", linear, "Check a single linear layer instead");
  gc->add_flag("--inject-fault", inject, "Break a backward pass on purpose");
  gc->add_option("--tolerance", tolerance, "Relative tolerance (default 1e-4, linear 1e-8)");
  gc->add_option("--seed", seed, "Random seed")->required();
  gc->callback([&] {
    canopy_gradcheck_options o;
    canopy_gradcheck_options_init(&o);
    o.linear = linear;
    o.model_config_path = opt(config);
    o.seed = seed;
    o.inject_fault = inject;
    o.tolerance = tolerance;
    canopy_gradcheck_result r{};
    status = report(c, canopy_gradcheck(c.ctx, &o, &r));
    if (status != 0) return;
    std::printf("max relative error %.3e (tolerance %.1e, %zu checks, worst %s)\n%s\n", r.max_rel_error, r.tolerance,
                r.checks, r.worst, r.passed ? "PASS" : "FAIL");
    if (!r.passed) status = CANOPY_ERROR_NUMERICAL;
  });

  // describe
  std::string preset = "full";
  auto* describe = app.add_subcommand("describe", "Print the shape ladder of a model config");
  describe->add_option("--preset", preset, "full, desk or tiny")->check(CLI::IsMember({"full", "desk", "tiny"}));
  describe->add_option("--config", config, "Model config JSON")->check(CLI::ExistingFile);
  describe->add_option("--out", out, "Write to this file instead of stdout");
  describe->callback([&] {
    char* text = nullptr;
    status = report(c, canopy_describe(c.ctx, preset.c_str(), opt(config), &text));
    if (status != 0) return;
    if (out.empty()) {
      std::fputs(text, stdout);
    } else {
      std::ofstream f(out);
      f << text;
      if (!f) {
        std::fprintf(stderr, "error: cannot write %s\n", out.c_str());
        status = CANOPY_ERROR_DATA;
      }
    }
    canopy_string_free(text);
  });

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Summarise a checkpoint");
  inspect->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  inspect->callback([&] {
    canopy_model* m = nullptr;
    status = report(c, canopy_model_load(c.ctx, checkpoint.c_str(), &m));
    if (status != 0) return;
    std::unique_ptr<canopy_model, decltype(&canopy_model_free)> guard(m, canopy_model_free);
    char* cfg = nullptr;
    char* sum = nullptr;
    status = report(c, canopy_model_config(c.ctx, m, &cfg));
    if (status == 0) status = report(c, canopy_model_backbone_checksum(c.ctx, m, &sum));
    if (status == 0)
      std::printf("parameters %zu\nbackbone_checksum %s\nconfig %s\n", canopy_model_parameter_count(m), sum, cfg);
    canopy_string_free(cfg);
    canopy_string_free(sum);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  if (!c.ctx) {
    std::fprintf(stderr, "error: out of memory\n");
    return CANOPY_ERROR_DATA;
  }
  return status;
}
