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

#include "pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common/error.hpp"
#include "model/model_check.hpp"
#include "model/swin_unet.hpp"
#include "nn/checkpoint.hpp"
#include "nn/ops.hpp"

namespace canopy::pipeline {

namespace {

template <typename V>
void read_key(const nlohmann::json& j, const char* key, V& out, const char* what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kInvalidArgument, what, ": key '", key, "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* what) {
  require(j.is_object(), what, " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      fail(ErrorKind::kInvalidArgument, what, ": unknown key '", it.key(), "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::kIo, "cannot create directory ", dir.string());
}

std::string path_string(const fs::path& p) { return p.lexically_normal().generic_string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

growth::GrowthConfig load_growth(const std::optional<fs::path>& path) {
  if (!path) return {};
  return growth_config_from_json(read_json_file(*path));
}

data::SyntheticPatch load_patch_checked(const fs::path& path, const model::ModelConfig& cfg) {
  auto p = data::read_patch(path);
  const auto& in = p.input;
  if (in.channels != cfg.channels || in.steps != cfg.timesteps || in.rows != cfg.height || in.cols != cfg.width)
    fail(ErrorKind::kData, "patch_embed: ", path.filename().string(), " holds input [", in.channels, ", ", in.steps,
         ", ", in.rows, ", ", in.cols, "] but the model expects [", cfg.channels, ", ", cfg.timesteps, ", ",
         cfg.height, ", ", cfg.width, "]");
  if (p.truth.depth != cfg.years)
    fail(ErrorKind::kData, "reference_head: ", path.filename().string(), " holds ", p.truth.depth,
         " label years but the model predicts ", cfg.years);
  return p;
}

void report_steps(training::RunOptions& ro, bool quiet, const char* phase, std::size_t total) {
  if (quiet) return;
  ro.on_step = [phase, total](std::size_t step, double loss, double lr) {
    if (step % 10 == 0 || step + 1 == total)
      std::fprintf(stderr, "%s step %zu/%zu loss %.6g lr %.3g\n", phase, step + 1, total, loss, lr);
  };
}

}  // namespace

growth::GrowthConfig growth_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"s_min", "s_max", "drop_fraction", "drop_absolute", "low_threshold", "pool_size", "norm"},
                 "growth config");
  growth::GrowthConfig c;
  read_key(j, "s_min", c.s_min, "growth config");
  read_key(j, "s_max", c.s_max, "growth config");
  read_key(j, "drop_fraction", c.drop_fraction, "growth config");
  read_key(j, "drop_absolute", c.drop_absolute, "growth config");
  read_key(j, "low_threshold", c.low_threshold, "growth config");
  read_key(j, "pool_size", c.pool_size, "growth config");
  std::string norm = "l2";
  read_key(j, "norm", norm, "growth config");
  if (norm == "l2")
    c.norm = growth::LossNorm::kL2;
  else if (norm == "l1")
    c.norm = growth::LossNorm::kL1;
  else
    fail(ErrorKind::kInvalidArgument, "growth config: norm must be \"l1\" or \"l2\", got \"", norm, "\"");
  c.validate();
  return c;
}

nlohmann::json to_json(const growth::GrowthConfig& c) {
  return {{"s_min", c.s_min},
          {"s_max", c.s_max},
          {"drop_fraction", c.drop_fraction},
          {"drop_absolute", c.drop_absolute},
          {"low_threshold", c.low_threshold},
          {"pool_size", c.pool_size},
          {"norm", c.norm == growth::LossNorm::kL2 ? "l2" : "l1"}};
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read ", path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kInvalidArgument, path.string(), ": invalid JSON: ", e.what());
  }
}

TrainingRunConfig training_run_config_from_json(const nlohmann::json& j, training::Phase expected) {
  reject_unknown(j, {"training", "model", "growth"}, "training run config");
  if (!j.contains("training")) fail(ErrorKind::kInvalidArgument, "training run config: missing \"training\"");
  TrainingRunConfig c;
  c.training = training::phase_config_from_json(j.at("training"));
  if (c.training.phase != expected)
    fail(ErrorKind::kInvalidArgument, "training run config is for phase ", training::phase_name(c.training.phase),
         ", expected ", training::phase_name(expected));
  if (j.contains("model")) {
    if (expected != training::Phase::kPretrain)
      fail(ErrorKind::kInvalidArgument, "training run config: \"model\" applies to pretraining only");
    c.model = model::model_config_from_json(j.at("model"));
  }
  if (j.contains("growth")) {
    if (expected != training::Phase::kFinetune)
      fail(ErrorKind::kInvalidArgument, "training run config: \"growth\" applies to fine-tuning only");
    c.growth = growth_config_from_json(j.at("growth"));
  }
  return c;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& run_dir, const Manifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config ? nlohmann::json(path_string(*m.config)) : nlohmann::json(nullptr);
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : m.inputs) j["inputs"].push_back(path_string(p));
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : m.outputs) j["outputs"].push_back(path_string(p));
  j["parameters"] = m.parameters;
  j["tool_version"] = kVersion;
  j["started_at"] = m.started_at;
  j["finished_at"] = utc_timestamp();
  std::ofstream out(run_dir / "manifest.json");
  if (!out) fail(ErrorKind::kIo, "cannot write ", (run_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

std::vector<fs::path> list_patches(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::kIo, "not a directory: ", dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("patch_", 0) == 0 && e.path().extension() == ".cnpy") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) fail(ErrorKind::kData, "no patch_*.cnpy files in ", dir.string());
  return out;
}

training::TrainingSample to_training_sample(const data::SyntheticPatch& p) {
  training::TrainingSample s;
  s.input = nn::Tensor<float>::from_vector({p.input.channels, p.input.steps, p.input.rows, p.input.cols},
                                           p.input.values);
  s.labels = p.labels.values;
  s.valid = p.valid.values;
  return s;
}

std::vector<fs::path> cmd_synth(const SynthOptions& o) {
  const auto started = utc_timestamp();
  auto cfg = data::synthetic_config_from_json(read_json_file(o.config));
  cfg.seed = o.seed;
  cfg.validate();
  require(o.patches >= 1, "synth: need at least one patch");
  ensure_dir(o.out_dir);
  std::vector<fs::path> files;
  for (std::size_t i = 0; i < o.patches; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "patch_%04zu.cnpy", i);
    const auto path = o.out_dir / name;
    data::write_patch(path, data::synth_generate(cfg, i), cfg);
    files.push_back(path);
  }
  Manifest m{"synth", o.config, o.seed, {o.config}, files, {{"patches", o.patches}, {"world", data::to_json(cfg)}},
             started};
  write_manifest(o.out_dir, m);
  return files;
}

fs::path cmd_pretrain(const TrainOptions& o) {
  const auto started = utc_timestamp();
  const auto run = training_run_config_from_json(read_json_file(o.config), training::Phase::kPretrain);
  run.model.validate();
  const auto files = list_patches(o.data_dir);
  std::vector<training::TrainingSample> samples;
  for (const auto& f : files) samples.push_back(to_training_sample(load_patch_checked(f, run.model)));
  ensure_dir(o.out_dir);
  training::Model m(run.model, o.seed);
  training::RunOptions ro;
  ro.seed = o.seed;
  ro.out_dir = o.out_dir;
  ro.resume = o.resume;
  report_steps(ro, o.quiet, "pretrain", run.training.total_steps);
  const auto res = training::run_pretrain(m, samples, run.training, ro);
  auto inputs = files;
  inputs.insert(inputs.begin(), o.config);
  if (o.resume) inputs.push_back(*o.resume);
  Manifest man{"pretrain", o.config, o.seed, inputs, {o.out_dir / "loss.csv", res.checkpoint},
               {{"training", training::to_json(run.training)}, {"model", model::to_json(run.model)}}, started};
  write_manifest(o.out_dir, man);
  return res.checkpoint;
}

fs::path cmd_finetune(const TrainOptions& o) {
  const auto started = utc_timestamp();
  if (!o.freeze_backbone)
    fail(ErrorKind::kInvalidArgument,
         "finetune trains only the prediction head on a frozen backbone; pass --freeze-backbone to confirm");
  const auto run = training_run_config_from_json(read_json_file(o.config), training::Phase::kFinetune);
  const auto ckpt = read_container(o.checkpoint, kCheckpointMagic);
  const auto mcfg = training::checkpoint_model_config(ckpt);
  training::Model m(mcfg, o.seed);
  training::restore_model(ckpt, m);
  const auto files = list_patches(o.data_dir);
  std::vector<training::FinetuneTarget> targets;
  for (const auto& f : files) {
    const auto p = load_patch_checked(f, mcfg);
    const auto input = nn::Tensor<float>::from_vector({p.input.channels, p.input.steps, p.input.rows, p.input.cols},
                                                      p.input.values);
    targets.push_back(training::prepare_finetune_target(m, input, run.growth));
  }
  ensure_dir(o.out_dir);
  training::RunOptions ro;
  ro.seed = o.seed;
  ro.out_dir = o.out_dir;
  ro.resume = o.resume;
  report_steps(ro, o.quiet, "finetune", run.training.total_steps);
  const auto res = training::run_finetune(m, targets, run.training, run.growth, ro);
  auto inputs = files;
  inputs.insert(inputs.begin(), o.checkpoint);
  inputs.insert(inputs.begin(), o.config);
  if (o.resume) inputs.push_back(*o.resume);
  Manifest man{"finetune",
               o.config,
               o.seed,
               inputs,
               {o.out_dir / "loss.csv", res.checkpoint},
               {{"training", training::to_json(run.training)}, {"growth", to_json(run.growth)}, {"freeze_backbone", true}},
               started};
  write_manifest(o.out_dir, man);
  return res.checkpoint;
}

void write_grid(const fs::path& path, const std::vector<std::pair<std::string, Grid3<float>>>& arrays,
                const nlohmann::json& metadata) {
  Container c;
  c.magic = kGridMagic;
  c.metadata = metadata;
  for (const auto& [name, g] : arrays)
    c.arrays.push_back(ContainerArray::from<float>(name, {g.depth, g.rows, g.cols}, g.values));
  write_container(path, c);
}

Grid3<double> read_grid_array(const fs::path& path, const std::string& name) {
  const auto c = read_container(path);
  if (c.magic != kGridMagic && c.magic != kPatchMagic)
    fail(ErrorKind::kData, path.string(), ": not a grid or patch container");
  const auto& a = c.get(name);
  if (a.shape.size() != 3)
    fail(ErrorKind::kData, path.string(), ": array ", name, " must be [Y, H, W], has rank ", a.shape.size());
  Grid3<double> g(a.shape[0], a.shape[1], a.shape[2]);
  if (a.dtype == DType::kF32) {
    const auto v = a.as<float>();
    std::copy(v.begin(), v.end(), g.values.begin());
  } else if (a.dtype == DType::kF64) {
    g.values = a.as<double>();
  } else {
    fail(ErrorKind::kData, path.string(), ": array ", name, " must hold floating-point heights");
  }
  for (double v : g.values)
    if (!std::isfinite(v)) fail(ErrorKind::kData, path.string(), ": array ", name, " holds non-finite values");
  return g;
}

std::vector<fs::path> cmd_predict(const PredictOptions& o) {
  const auto started = utc_timestamp();
  require(!o.patches.empty(), "predict: no patches given");
  const auto ckpt = read_container(o.checkpoint, kCheckpointMagic);
  const auto mcfg = training::checkpoint_model_config(ckpt);
  training::Model m(mcfg, 0);
  training::restore_model(ckpt, m);
  ensure_dir(o.out_dir);
  nn::NoGradGuard ng;
  std::vector<fs::path> outputs;
  for (const auto& f : o.patches) {
    const auto p = load_patch_checked(f, mcfg);
    const auto out = m.forward(to_training_sample(p).input);
    auto grid = [&](const nn::Tensor<float>& t) {
      Grid3<float> g(mcfg.years, mcfg.height, mcfg.width);
      const auto v = t.values();
      g.values.assign(v.begin(), v.end());
      return g;
    };
    const auto path = o.out_dir / ("pred_" + f.stem().string() + ".cnpy");
    write_grid(path, {{"reference", grid(out.reference)}, {"prediction", grid(out.prediction)}},
               {{"patch", path_string(f)}, {"checkpoint", path_string(o.checkpoint)}});
    outputs.push_back(path);
  }
  auto inputs = o.patches;
  inputs.insert(inputs.begin(), o.checkpoint);
  write_manifest(o.out_dir, {"predict", std::nullopt, std::nullopt, inputs, outputs, {}, started});
  return outputs;
}

fs::path cmd_pseudolabel(const PseudolabelOptions& o) {
  const auto started = utc_timestamp();
  const auto cfg = load_growth(o.growth_config);
  std::ifstream in(o.series_csv);
  if (!in) fail(ErrorKind::kIo, "cannot read ", o.series_csv.string());
  ensure_dir(o.out_dir);
  const auto out_path = o.out_dir / "pseudo_labels.csv";
  std::ofstream out(out_path);
  if (!out) fail(ErrorKind::kIo, "cannot write ", out_path.string());

  std::string line;
  if (std::getline(in, line)) {
    const auto header = split_csv_line(line);
    const std::size_t Y = header.size();
    for (std::size_t i = 0; i < Y; ++i)
      if (header[i] != "y" + std::to_string(i + 1))
        fail(ErrorKind::kData, o.series_csv.string(), ": header must be y1..yY, column ", i + 1, " is '", header[i],
             "'");
    for (const auto& h : header) out << h << ',';
    out << "split_year\n";
    std::size_t row = 1;
    std::vector<double> z(Y);
    while (std::getline(in, line)) {
      ++row;
      if (line.empty() || line == "\r") continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != Y)
        fail(ErrorKind::kData, o.series_csv.string(), " row ", row, ": expected ", Y, " values, got ", cells.size());
      for (std::size_t i = 0; i < Y; ++i) {
        try {
          std::size_t used = 0;
          z[i] = std::stod(cells[i], &used);
          if (used != cells[i].size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
          fail(ErrorKind::kData, o.series_csv.string(), " row ", row, ": '", cells[i], "' is not a number");
        }
      }
      try {
        const int split = growth::local_disturbance_index(z, cfg);
        const auto pl = growth::pseudo_labels(z, split, cfg);
        for (double v : pl.values) out << format_number(v) << ',';
        out << pl.split_year << '\n';
      } catch (const Error& e) {
        fail(ErrorKind::kData, o.series_csv.string(), " row ", row, ": ", e.what());
      }
    }
  }
  out.close();
  Manifest m{"pseudolabel", o.growth_config, std::nullopt, {o.series_csv}, {out_path}, {{"growth", to_json(cfg)}},
             started};
  write_manifest(o.out_dir, m);
  return out_path;
}

DisturbanceSummary cmd_disturbance(const DisturbanceOptions& o) {
  const auto started = utc_timestamp();
  const auto cfg = load_growth(o.growth_config);
  const auto z = read_grid_array(o.grid, o.array);
  if (z.depth < 2) fail(ErrorKind::kData, o.grid.string(), ": need at least 2 years, got ", z.depth);
  const auto map = growth::disturbance_map(z, cfg);
  DisturbanceSummary s;
  s.years = z.depth;
  s.counts.assign(z.depth, 0);
  for (int v : map.values) ++s.counts[static_cast<std::size_t>(v - 1)];

  ensure_dir(o.out_dir);
  const auto map_path = o.out_dir / "disturbance.cnpy";
  Container c;
  c.magic = kGridMagic;
  c.metadata = {{"source", path_string(o.grid)}, {"array", o.array}, {"years", z.depth}, {"growth", to_json(cfg)}};
  c.arrays.push_back(ContainerArray::from<std::int32_t>(
      "disturbance_index", {map.rows, map.cols},
      std::vector<std::int32_t>(map.values.begin(), map.values.end())));
  write_container(map_path, c);
  const auto summary_path = o.out_dir / "disturbance_summary.csv";
  std::ofstream out(summary_path);
  if (!out) fail(ErrorKind::kIo, "cannot write ", summary_path.string());
  out << "year,pixels\n";
  for (std::size_t y = 0; y < s.years; ++y) out << y + 1 << ',' << s.counts[y] << '\n';
  out.close();
  write_manifest(o.out_dir, {"disturbance", o.growth_config, std::nullopt, {o.grid}, {map_path, summary_path},
                             {{"array", o.array}, {"growth", to_json(cfg)}}, started});
  return s;
}

eval::MetricReport cmd_evaluate(const EvaluateOptions& o) {
  const auto started = utc_timestamp();
  const auto pred = read_grid_array(o.prediction_grid, o.array);
  const auto patch = data::read_patch(o.patch);
  if (!pred.same_shape(Grid3<double>(patch.truth.depth, patch.truth.rows, patch.truth.cols)))
    fail(ErrorKind::kData, "prediction [", pred.depth, ", ", pred.rows, ", ", pred.cols,
         "] and patch labels are not co-registered");
  const std::size_t Y = pred.depth, H = pred.rows, W = pred.cols, P = H * W;
  constexpr double kPixel = 10.0;

  // Heights are non-negative; raw model outputs can dip below zero.
  auto height = [&](std::size_t i) { return std::max(0.0, pred.values[i]); };
  std::vector<eval::PairedSample> samples;
  std::vector<std::vector<eval::SpatialPoint>> points(Y);
  for (std::size_t y = 0; y < Y; ++y)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t i = y * P + r * W + c;
        if (!o.against_truth && !patch.valid.values[i]) continue;
        const double label = o.against_truth ? patch.truth.values[i] : patch.labels.values[i];
        const double x = (static_cast<double>(c) + 0.5) * kPixel, yy = (static_cast<double>(r) + 0.5) * kPixel;
        samples.push_back({height(i), label, x, yy, static_cast<int>(y + 1)});
        points[y].push_back({x, yy, label});
      }
  if (samples.empty()) fail(ErrorKind::kData, "no valid labels overlap the prediction grid");
  const auto report = eval::metric_report(samples, o.floor, o.r2);

  ensure_dir(o.out_dir);
  std::vector<fs::path> outputs;
  auto open = [&](const char* name) {
    outputs.push_back(o.out_dir / name);
    std::ofstream f(outputs.back());
    if (!f) fail(ErrorKind::kIo, "cannot write ", outputs.back().string());
    return f;
  };
  {
    auto f = open("report.txt");
    eval::write_report_table(f, report);
  }
  {
    auto f = open("report.csv");
    eval::write_report_csv(f, report);
  }
  {
    auto f = open("height_bins.csv");
    eval::write_bins_csv(f, eval::height_binned_errors(samples, o.bin_width));
  }
  Grid2<double> first(H, W), last(H, W);
  Grid3<double> series(Y, H, W);
  for (std::size_t i = 0; i < Y * P; ++i) series.values[i] = height(i);
  for (std::size_t i = 0; i < P; ++i) {
    first.values[i] = series.values[i];
    last.values[i] = series.values[(Y - 1) * P + i];
  }
  {
    auto f = open("change_scatter.csv");
    eval::write_bins_csv(f, eval::change_scatter(first, last).bins);
  }
  {
    auto f = open("growth_curves.csv");
    eval::write_growth_curves_csv(f, eval::growth_curves(series));
  }
  {
    auto f = open("autocorrelation.csv");
    f << "year,";
    bool header = true;
    for (std::size_t y = 0; y < Y; ++y) {
      if (points[y].size() < 2) continue;
      std::ostringstream block;
      eval::write_lag_bins_csv(block, eval::spatial_autocorrelation(points[y]));
      std::string l;
      std::istringstream rows(block.str());
      std::getline(rows, l);
      if (header) f << l << '\n';
      header = false;
      while (std::getline(rows, l)) f << y + 1 << ',' << l << '\n';
    }
    if (header) f << "lag_lo,lag_hi,lag_center,pairs,correlation\n";
  }
  write_manifest(o.out_dir, {"evaluate",
                             std::nullopt,
                             std::nullopt,
                             {o.prediction_grid, o.patch},
                             outputs,
                             {{"array", o.array},
                              {"against", o.against_truth ? "truth" : "labels"},
                              {"floor", o.floor},
                              {"bin_width", o.bin_width},
                              {"r2", o.r2 == eval::R2Kind::kSquaredPearson ? "pearson" : "determination"}},
                             started});
  return report;
}

GradcheckReport cmd_gradcheck(const GradcheckOptions& o) {
  struct FaultScope {
    explicit FaultScope(bool on) {
      if (on) nn::set_fault_injection(nn::FaultInjection::kLayerNormBackward);
    }
    ~FaultScope() { nn::set_fault_injection(nn::FaultInjection::kNone); }
  } scope(o.inject_fault);
  GradcheckReport r;
  r.tolerance = o.tolerance;
  if (o.linear) {
    nn::GradCheckOptions opt;
    opt.coords_per_param = 0;
    opt.seed = o.seed;
    r.result = model::linear_grad_check(opt);
  } else {
    const auto cfg = o.model_config ? model::model_config_from_json(read_json_file(*o.model_config))
                                    : model::ModelConfig::tiny_scale();
    auto opt = model::model_grad_check_options();
    opt.seed = o.seed;
    r.result = model::model_grad_check(cfg, opt);
  }
  r.passed = r.result.max_rel_error <= o.tolerance;
  return r;
}

std::string cmd_describe(const std::string& preset, const std::optional<fs::path>& config) {
  if (config) return model::describe(model::model_config_from_json(read_json_file(*config)));
  if (preset == "full") return model::describe(model::ModelConfig::full_scale());
  if (preset == "desk") return model::describe(model::ModelConfig::desk_scale());
  if (preset == "tiny") return model::describe(model::ModelConfig::tiny_scale());
  fail(ErrorKind::kInvalidArgument, "unknown preset '", preset, "' (full, desk or tiny)");
}

}  // namespace canopy::pipeline
