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

#include "canopy/canopy.h"

#include <cstring>
#include <new>
#include <string>

#include "common/error.hpp"
#include "data/footprint.hpp"
#include "nn/checkpoint.hpp"
#include "pipeline/commands.hpp"

struct canopy_context {
  std::string error;
};

struct canopy_model {
  canopy::training::Model model;
};

namespace {

using canopy::ErrorKind;

canopy_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return CANOPY_ERROR_USAGE;
    case ErrorKind::kNumerical:
      return CANOPY_ERROR_NUMERICAL;
    case ErrorKind::kData:
    case ErrorKind::kIo:
      return CANOPY_ERROR_DATA;
  }
  return CANOPY_ERROR_DATA;
}

template <typename F>
canopy_status guarded(canopy_context* ctx, F&& f) {
  if (!ctx) return CANOPY_ERROR_USAGE;
  ctx->error.clear();
  try {
    f();
    return CANOPY_OK;
  } catch (const canopy::Error& e) {
    ctx->error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    ctx->error = "out of memory";
  } catch (const std::exception& e) {
    ctx->error = e.what();
  }
  return CANOPY_ERROR_DATA;
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const char* need(const char* s, const char* what) {
  if (!s || !*s) canopy::fail(ErrorKind::kInvalidArgument, what, " is required");
  return s;
}

template <typename T>
T* out_ptr(T* p) {
  if (!p) canopy::fail(ErrorKind::kInvalidArgument, "output pointer is required");
  return p;
}

std::optional<std::filesystem::path> optional_path(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::filesystem::path(s);
}

canopy::pipeline::TrainOptions train_options(const canopy_train_options* o) {
  if (!o) canopy::fail(ErrorKind::kInvalidArgument, "training options are required");
  canopy::pipeline::TrainOptions t;
  t.config = need(o->config_path, "config path");
  t.data_dir = need(o->data_dir, "data directory");
  t.out_dir = need(o->out_dir, "output directory");
  t.seed = o->seed;
  t.resume = optional_path(o->resume_path);
  if (o->checkpoint_path) t.checkpoint = o->checkpoint_path;
  t.freeze_backbone = o->freeze_backbone != 0;
  t.quiet = o->verbose == 0;
  return t;
}

}  // namespace

extern "C" {

const char* canopy_version(void) { return canopy::pipeline::kVersion; }

canopy_context* canopy_context_new(void) { return new (std::nothrow) canopy_context(); }

void canopy_context_free(canopy_context* ctx) { delete ctx; }

const char* canopy_last_error(const canopy_context* ctx) { return ctx ? ctx->error.c_str() : "no context"; }

void canopy_string_free(char* s) { std::free(s); }

canopy_status canopy_synth(canopy_context* ctx, const char* config_path, const char* out_dir, size_t patches,
                           uint64_t seed) {
  return guarded(ctx, [&] {
    canopy::pipeline::cmd_synth({need(config_path, "config path"), need(out_dir, "output directory"), patches, seed});
  });
}

void canopy_train_options_init(canopy_train_options* o) {
  if (o) *o = canopy_train_options{};
}

canopy_status canopy_pretrain(canopy_context* ctx, const canopy_train_options* options, char** checkpoint_out) {
  return guarded(ctx, [&] {
    const auto path = canopy::pipeline::cmd_pretrain(train_options(options));
    if (checkpoint_out) *checkpoint_out = dup_string(path.string());
  });
}

canopy_status canopy_finetune(canopy_context* ctx, const canopy_train_options* options, char** checkpoint_out) {
  return guarded(ctx, [&] {
    auto t = train_options(options);
    need(options->checkpoint_path, "pretrained checkpoint");
    const auto path = canopy::pipeline::cmd_finetune(t);
    if (checkpoint_out) *checkpoint_out = dup_string(path.string());
  });
}

canopy_status canopy_predict(canopy_context* ctx, const char* checkpoint_path, const char* const* patch_paths,
                             size_t count, const char* out_dir) {
  return guarded(ctx, [&] {
    canopy::pipeline::PredictOptions o;
    o.checkpoint = need(checkpoint_path, "checkpoint path");
    for (size_t i = 0; i < count; ++i) o.patches.emplace_back(need(patch_paths[i], "patch path"));
    o.out_dir = need(out_dir, "output directory");
    canopy::pipeline::cmd_predict(o);
  });
}

canopy_status canopy_pseudolabel(canopy_context* ctx, const char* series_csv, const char* growth_config_path,
                                 const char* out_dir) {
  return guarded(ctx, [&] {
    canopy::pipeline::cmd_pseudolabel(
        {need(series_csv, "series CSV"), optional_path(growth_config_path), need(out_dir, "output directory")});
  });
}

canopy_status canopy_disturbance(canopy_context* ctx, const char* grid_path, const char* array,
                                 const char* growth_config_path, const char* out_dir, size_t* counts,
                                 size_t capacity, size_t* years) {
  return guarded(ctx, [&] {
    canopy::pipeline::DisturbanceOptions o;
    o.grid = need(grid_path, "grid path");
    if (array && *array) o.array = array;
    o.growth_config = optional_path(growth_config_path);
    o.out_dir = need(out_dir, "output directory");
    const auto s = canopy::pipeline::cmd_disturbance(o);
    if (years) *years = s.years;
    if (counts) {
      if (capacity < s.years)
        canopy::fail(ErrorKind::kInvalidArgument, "count buffer holds ", capacity, " entries, need ", s.years);
      for (size_t i = 0; i < s.years; ++i) counts[i] = s.counts[i];
    }
  });
}

void canopy_evaluate_options_init(canopy_evaluate_options* o) {
  if (!o) return;
  *o = canopy_evaluate_options{};
  o->array = "prediction";
  o->floor = 5.0;
  o->bin_width = 5.0;
  o->r2 = CANOPY_R2_PEARSON;
}

canopy_status canopy_evaluate(canopy_context* ctx, const canopy_evaluate_options* options,
                              canopy_metric_report* report) {
  return guarded(ctx, [&] {
    if (!options) canopy::fail(ErrorKind::kInvalidArgument, "evaluation options are required");
    canopy::pipeline::EvaluateOptions o;
    o.prediction_grid = need(options->prediction_grid, "prediction grid");
    if (options->array && *options->array) o.array = options->array;
    o.patch = need(options->patch_path, "patch path");
    o.against_truth = options->against_truth != 0;
    o.floor = options->floor;
    o.bin_width = options->bin_width;
    o.r2 = options->r2 == CANOPY_R2_DETERMINATION ? canopy::eval::R2Kind::kDetermination
                                                  : canopy::eval::R2Kind::kSquaredPearson;
    o.out_dir = need(options->out_dir, "output directory");
    const auto r = canopy::pipeline::cmd_evaluate(o);
    if (report)
      *report = {r.mae,     r.mse,     r.rmse,     r.mape,     r.r2, r.r2_all, r.iqr_mae,
                 r.iqr_mse, r.iqr_rmse, r.iqr_mape, r.n,  r.n_all};
  });
}

canopy_status canopy_footprint_plane(canopy_context* ctx, double sigma, double* fraction) {
  return guarded(ctx, [&] {
    *out_ptr(fraction) = canopy::data::footprint_fraction(sigma, canopy::data::WholePlane{});
  });
}

canopy_status canopy_footprint_rect(canopy_context* ctx, double sigma, double x_min, double y_min, double x_max,
                                    double y_max, double* fraction) {
  return guarded(ctx, [&] {
    *out_ptr(fraction) = canopy::data::footprint_fraction(sigma, canopy::data::Rect{x_min, y_min, x_max, y_max});
  });
}

canopy_status canopy_footprint_disc(canopy_context* ctx, double sigma, double cx, double cy, double radius,
                                    double* fraction) {
  return guarded(ctx, [&] {
    *out_ptr(fraction) = canopy::data::footprint_fraction(sigma, canopy::data::Disc{cx, cy, radius});
  });
}

canopy_status canopy_footprint_solve_sigma(canopy_context* ctx, double side, double fraction, double* sigma) {
  return guarded(ctx, [&] { *out_ptr(sigma) = canopy::data::sigma_for_square_fraction(side, fraction); });
}

void canopy_gradcheck_options_init(canopy_gradcheck_options* o) {
  if (o) *o = canopy_gradcheck_options{};
}

canopy_status canopy_gradcheck(canopy_context* ctx, const canopy_gradcheck_options* options,
                               canopy_gradcheck_result* result) {
  return guarded(ctx, [&] {
    if (!options || !result) canopy::fail(ErrorKind::kInvalidArgument, "gradcheck options and result are required");
    canopy::pipeline::GradcheckOptions o;
    o.linear = options->linear != 0;
    o.model_config = optional_path(options->model_config_path);
    o.seed = options->seed;
    o.inject_fault = options->inject_fault != 0;
    o.tolerance = options->tolerance > 0.0 ? options->tolerance : (o.linear ? 1e-8 : 1e-4);
    const auto r = canopy::pipeline::cmd_gradcheck(o);
    *result = canopy_gradcheck_result{};
    result->max_rel_error = r.result.max_rel_error;
    result->tolerance = r.tolerance;
    result->checks = r.result.checks;
    result->passed = r.passed ? 1 : 0;
    std::strncpy(result->worst, r.result.worst.c_str(), sizeof(result->worst) - 1);
  });
}

canopy_status canopy_describe(canopy_context* ctx, const char* preset, const char* config_path, char** text) {
  return guarded(ctx, [&] {
    if (!text) canopy::fail(ErrorKind::kInvalidArgument, "output pointer is required");
    *text = dup_string(canopy::pipeline::cmd_describe(preset ? preset : "full", optional_path(config_path)));
  });
}

canopy_status canopy_model_load(canopy_context* ctx, const char* checkpoint_path, canopy_model** model) {
  return guarded(ctx, [&] {
    if (!model) canopy::fail(ErrorKind::kInvalidArgument, "output pointer is required");
    const auto c = canopy::read_container(need(checkpoint_path, "checkpoint path"), canopy::kCheckpointMagic);
    auto m = std::make_unique<canopy_model>(canopy_model{canopy::training::Model(
        canopy::training::checkpoint_model_config(c), 0)});
    canopy::training::restore_model(c, m->model);
    *model = m.release();
  });
}

void canopy_model_free(canopy_model* model) { delete model; }

size_t canopy_model_parameter_count(const canopy_model* model) {
  return model ? model->model.parameters().numel() : 0;
}

canopy_status canopy_model_config(canopy_context* ctx, const canopy_model* model, char** json) {
  return guarded(ctx, [&] {
    if (!model || !json) canopy::fail(ErrorKind::kInvalidArgument, "model and output pointer are required");
    *json = dup_string(canopy::model::to_json(model->model.config()).dump(2));
  });
}

canopy_status canopy_model_backbone_checksum(canopy_context* ctx, const canopy_model* model, char** hex) {
  return guarded(ctx, [&] {
    if (!model || !hex) canopy::fail(ErrorKind::kInvalidArgument, "model and output pointer are required");
    *hex = dup_string(canopy::nn::checksum_hex(canopy::nn::parameter_checksum(
        model->model.parameters(), {canopy::model::kPredictionHeadPrefix}, true)));
  });
}

}  // extern "C"
