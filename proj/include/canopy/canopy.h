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

/* C interface of the canopy library.
 *
 * Every call that can fail takes a context and returns a canopy_status;
 * canopy_last_error() then holds a message. Status values match the exit
 * codes of the command line tool. Strings returned through char** are owned
 * by the caller and released with canopy_string_free().
 */

#ifndef CANOPY_CANOPY_H
#define CANOPY_CANOPY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CANOPY_API __declspec(dllexport)
#else
#define CANOPY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum canopy_status {
  CANOPY_OK = 0,
  CANOPY_ERROR_USAGE = 1,     /* invalid argument or configuration */
  CANOPY_ERROR_DATA = 2,      /* malformed, missing or unreadable input */
  CANOPY_ERROR_NUMERICAL = 3, /* non-finite values, failed checks */
} canopy_status;

typedef struct canopy_context canopy_context;
typedef struct canopy_model canopy_model;

CANOPY_API const char* canopy_version(void);

CANOPY_API canopy_context* canopy_context_new(void);
CANOPY_API void canopy_context_free(canopy_context* ctx);
/* Message of the last failed call on ctx; empty after a success. */
CANOPY_API const char* canopy_last_error(const canopy_context* ctx);
CANOPY_API void canopy_string_free(char* s);

/* Writes patch_0000.cnpy .. into out_dir. seed replaces the config's seed. */
CANOPY_API canopy_status canopy_synth(canopy_context* ctx, const char* config_path, const char* out_dir,
                                      size_t patches, uint64_t seed);

typedef struct canopy_train_options {
  const char* config_path;
  const char* data_dir;
  const char* out_dir;
  uint64_t seed;
  const char* resume_path;      /* optional */
  const char* checkpoint_path;  /* fine-tuning: the pretrained model */
  int freeze_backbone;          /* fine-tuning: must be non-zero */
  int verbose;                  /* progress on stderr */
} canopy_train_options;

CANOPY_API void canopy_train_options_init(canopy_train_options* options);
/* On success *checkpoint_out (optional) receives the final checkpoint path. */
CANOPY_API canopy_status canopy_pretrain(canopy_context* ctx, const canopy_train_options* options,
                                         char** checkpoint_out);
CANOPY_API canopy_status canopy_finetune(canopy_context* ctx, const canopy_train_options* options,
                                         char** checkpoint_out);

CANOPY_API canopy_status canopy_predict(canopy_context* ctx, const char* checkpoint_path,
                                        const char* const* patch_paths, size_t count, const char* out_dir);

/* growth_config_path may be NULL for the defaults. */
CANOPY_API canopy_status canopy_pseudolabel(canopy_context* ctx, const char* series_csv,
                                            const char* growth_config_path, const char* out_dir);

/* counts[y - 1] receives the number of pixels with pooled disturbance index
 * y; *years receives Y. Fails when capacity < Y. */
CANOPY_API canopy_status canopy_disturbance(canopy_context* ctx, const char* grid_path, const char* array,
                                            const char* growth_config_path, const char* out_dir, size_t* counts,
                                            size_t capacity, size_t* years);

typedef enum canopy_r2_kind { CANOPY_R2_PEARSON = 0, CANOPY_R2_DETERMINATION = 1 } canopy_r2_kind;

typedef struct canopy_evaluate_options {
  const char* prediction_grid;
  const char* array; /* default "prediction" */
  const char* patch_path;
  int against_truth;
  double floor;     /* m */
  double bin_width; /* m */
  canopy_r2_kind r2;
  const char* out_dir;
} canopy_evaluate_options;

typedef struct canopy_metric_report {
  double mae, mse, rmse, mape, r2, r2_all;
  double iqr_mae, iqr_mse, iqr_rmse, iqr_mape;
  size_t n, n_all;
} canopy_metric_report;

CANOPY_API void canopy_evaluate_options_init(canopy_evaluate_options* options);
CANOPY_API canopy_status canopy_evaluate(canopy_context* ctx, const canopy_evaluate_options* options,
                                         canopy_metric_report* report);

/* Energy share of an isotropic Gaussian pulse (std sigma, centred at the
 * origin) inside a region. */
CANOPY_API canopy_status canopy_footprint_plane(canopy_context* ctx, double sigma, double* fraction);
CANOPY_API canopy_status canopy_footprint_rect(canopy_context* ctx, double sigma, double x_min, double y_min,
                                               double x_max, double y_max, double* fraction);
CANOPY_API canopy_status canopy_footprint_disc(canopy_context* ctx, double sigma, double cx, double cy,
                                               double radius, double* fraction);
/* Sigma for which a centred square of the given side holds `fraction`. */
CANOPY_API canopy_status canopy_footprint_solve_sigma(canopy_context* ctx, double side, double fraction,
                                                      double* sigma);

typedef struct canopy_gradcheck_options {
  int linear;                    /* single linear layer instead of the model */
  const char* model_config_path; /* optional; default tiny scale */
  uint64_t seed;
  int inject_fault;              /* corrupt a backward pass on purpose */
  double tolerance;              /* 0: 1e-4, or 1e-8 for the linear check */
} canopy_gradcheck_options;

typedef struct canopy_gradcheck_result {
  double max_rel_error;
  double tolerance;
  size_t checks;
  int passed;
  char worst[128];
} canopy_gradcheck_result;

CANOPY_API void canopy_gradcheck_options_init(canopy_gradcheck_options* options);
/* Returns CANOPY_OK when the check ran, whether or not it passed. */
CANOPY_API canopy_status canopy_gradcheck(canopy_context* ctx, const canopy_gradcheck_options* options,
                                          canopy_gradcheck_result* result);

/* Shape ladder of a preset ("full", "desk", "tiny") or of a config file. */
CANOPY_API canopy_status canopy_describe(canopy_context* ctx, const char* preset, const char* config_path,
                                         char** text);

CANOPY_API canopy_status canopy_model_load(canopy_context* ctx, const char* checkpoint_path, canopy_model** model);
CANOPY_API void canopy_model_free(canopy_model* model);
CANOPY_API size_t canopy_model_parameter_count(const canopy_model* model);
/* Model config as JSON. */
CANOPY_API canopy_status canopy_model_config(canopy_context* ctx, const canopy_model* model, char** json);
/* 16 hex digits over every parameter outside the prediction head. */
CANOPY_API canopy_status canopy_model_backbone_checksum(canopy_context* ctx, const canopy_model* model,
                                                        char** hex);

#ifdef __cplusplus
}
#endif

#endif /* CANOPY_CANOPY_H */
