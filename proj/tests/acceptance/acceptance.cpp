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

// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero when any criterion fails. `--only 3,5` runs a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "common/error.hpp"
#include "data/footprint.hpp"
#include "data/gedi.hpp"
#include "data/normalization.hpp"
#include "data/split.hpp"
#include "data/synthetic.hpp"
#include "eval/metrics.hpp"
#include "growth/growth.hpp"
#include "model/layers.hpp"
#include "model/model_check.hpp"
#include "model/swin_unet.hpp"
#include "model/window.hpp"
#include "nn/checkpoint.hpp"
#include "oracles/growth_oracle.hpp"
#include "oracles/metrics_oracle.hpp"
#include "pipeline/commands.hpp"
#include "training/trainer.hpp"

using namespace canopy;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects failed expectations of one criterion.
class Outcome {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ |= !ok;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool passed() const { return !failed_; }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("failed: " + f);
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_, notes_;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- growth

std::vector<double> random_series(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 60.0), low(0.0, 9.0);
  std::uniform_int_distribution<int> pick(1, 6), coin(0, 2);
  std::vector<double> z(7);
  for (auto& v : z) v = u(rng);
  // A third of the series get a planted drop so detections are common.
  if (coin(rng) == 0) z[static_cast<std::size_t>(pick(rng))] = low(rng);
  return z;
}

void growth_oracle_suite(Outcome& out) {
  const growth::GrowthConfig cfg;
  std::mt19937_64 rng(20260417);
  const auto t0 = Clock::now();
  std::size_t detected = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto z = random_series(rng);
    std::vector<double> pred = random_series(rng);

    const auto years = growth::detect_disturbance_years(z, cfg);
    const auto expect = oracle::disturbance_years(z);
    if (std::set<int>(years.begin(), years.end()) != expect) out.expect(false, fmt("detect, trial %d", trial));
    detected += !expect.empty();

    const auto fit = growth::constrained_linreg(z, cfg.s_min, cfg.s_max);
    const auto fit_ref = oracle::clamped_fit(z, cfg.s_min, cfg.s_max);
    worst = std::max(worst, std::abs(fit.slope - std::clamp(oracle::ols_slope(z), cfg.s_min, cfg.s_max)));
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(fit.fitted[i] - fit_ref[i]));

    const int split = oracle::local_index(z);
    const auto pl = growth::pseudo_labels(z, split, cfg);
    const auto pl_ref = oracle::piecewise(z, split, cfg.s_min, cfg.s_max);
    out.expect(pl.split_year == split, fmt("pseudo-label split, trial %d", trial));
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(pl.values[i] - pl_ref[i]));

    const double loss = growth::growth_loss(z, pred, cfg);
    worst = std::max(worst, std::abs(loss - oracle::l2_over_len(pl_ref, pred)));
  }
  const double secs = seconds_since(t0);
  out.expect(worst <= 1e-9, fmt("max deviation %.3g", worst));
  out.expect(secs < 10.0, fmt("runtime %.2f s", secs));
  out.expect(detected > 1000, fmt("only %zu series with a disturbance", detected));
  out.note(fmt("10000 series, %zu disturbed, max deviation %.2g, %.2f s", detected, worst, secs));
}

void worked_examples(Outcome& out) {
  const growth::GrowthConfig cfg;
  const std::vector<double> a{20, 21, 22, 5, 6, 7, 8};
  const int split = growth::local_disturbance_index(a, cfg);
  out.expect(split == 3, fmt("split %d", split));
  const auto pa = growth::pseudo_labels(a, split, cfg);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.expect(std::abs(pa.values[i] - a[i]) <= 1e-12, fmt("pseudo-label %zu = %.15g", i, pa.values[i]));

  auto check_fit = [&](std::vector<double> z, std::vector<double> want) {
    const auto f = growth::constrained_linreg(z, cfg.s_min, cfg.s_max);
    for (std::size_t i = 0; i < z.size(); ++i)
      out.expect(std::abs(f.fitted[i] - want[i]) <= 1e-12, fmt("fit[%zu] = %.15g, want %g", i, f.fitted[i], want[i]));
  };
  check_fit({10, 9, 8}, {9, 9, 9});
  check_fit({0, 10, 20}, {7, 10, 13});
  out.note("split 3, [9,9,9], [7,10,13]");
}

// ---------------------------------------------------------------- model

void shape_ladder(Outcome& out, const fs::path& golden) {
  std::ifstream in(golden);
  out.expect(in.good(), "cannot read " + golden.string());
  const std::string want((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto got = pipeline::cmd_describe("full", std::nullopt);
  out.expect(got == want, "describe output differs from " + golden.filename().string());

  const std::vector<std::pair<std::string, nn::Shape>> annotations{
      {"encoder.0", {84, 96, 96, 72}},          {"encoder.0.downsample", {28, 48, 48, 144}},
      {"encoder.1.downsample", {14, 24, 24, 288}}, {"encoder.2.downsample", {7, 12, 12, 576}},
      {"decoder.0.expand", {7, 24, 24, 288}},   {"decoder.1.expand", {7, 48, 48, 144}},
      {"decoder.2.expand", {7, 96, 96, 72}},    {"output", {2, 7, 96, 96}}};
  std::map<std::string, nn::Shape> stages;
  for (const auto& s : model::plan_stages(model::ModelConfig::full_scale())) stages[s.name] = s.shape;
  for (const auto& [name, shape] : annotations) out.expect(stages[name] == shape, "stage " + name);
  out.note(fmt("%zu annotated shapes", annotations.size()));
}

void tiny_gradcheck(Outcome& out) {
  const auto t0 = Clock::now();
  model::TemporalSwinUnet<double> m(model::ModelConfig::tiny_scale(), 3);
  auto opt = model::model_grad_check_options();
  opt.seed = 3;
  const auto res = model::model_grad_check(m, opt);
  const double secs = seconds_since(t0);
  out.expect(res.max_rel_error < 1e-4, fmt("max relative error %.3g", res.max_rel_error) + " at " + res.worst);
  out.expect(res.checks > 2 * m.parameters().size(), "too few coordinates checked");
  out.expect(secs < 300.0, fmt("runtime %.1f s", secs));
  out.note(fmt("%zu checks, max relative error %.2g, %.1f s", res.checks, res.max_rel_error, secs));
}

struct Axis {
  std::size_t window, shift, padded;
  std::size_t window_of(std::size_t c) const { return ((c + padded - shift) % padded) / window; }
  bool wrapped(std::size_t c) const { return c < shift; }
};

Axis make_axis(std::size_t extent, std::size_t requested, bool shifted) {
  Axis a{};
  a.window = std::min(extent, requested);
  a.shift = (extent <= requested || !shifted) ? 0 : a.window / 2;
  a.padded = (extent + a.window - 1) / a.window * a.window;
  return a;
}

void window_partition(Outcome& out) {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<std::size_t> ext_t(1, 7), ext_s(1, 15), win_t(1, 3), win_s(2, 6), coin(0, 1);
  std::size_t blocked_pairs = 0;
  for (int c = 0; c < 100; ++c) {
    const model::Extent3 extent{ext_t(rng), ext_s(rng), ext_s(rng)};
    const model::Extent3 window{win_t(rng), win_s(rng), win_s(rng)};
    const bool shifted = coin(rng) == 1;
    const auto plan = model::make_window_plan(extent, window, shifted);
    const std::size_t tokens = extent[0] * extent[1] * extent[2], N = plan.tokens_per_window;

    std::vector<int> seen(tokens, 0);
    for (auto g : plan.gather)
      if (g >= 0) ++seen[static_cast<std::size_t>(g)];
    bool bijective = std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    for (std::size_t t = 0; t < tokens && bijective; ++t)
      bijective = plan.gather[static_cast<std::size_t>(plan.scatter[t])] == static_cast<std::int64_t>(t);
    out.expect(bijective, fmt("case %d: partition is not a bijection", c));

    std::array<Axis, 3> ax{};
    for (int a = 0; a < 3; ++a) ax[a] = make_axis(extent[a], window[a], shifted);
    auto coords = [&](std::int64_t t) {
      const auto u = static_cast<std::size_t>(t);
      return std::array<std::size_t, 3>{u / (extent[1] * extent[2]), u / extent[2] % extent[1], u % extent[2]};
    };
    auto region = [&](std::int64_t t) {
      const auto p = coords(t);
      return std::array<std::size_t, 6>{ax[0].window_of(p[0]), ax[1].window_of(p[1]), ax[2].window_of(p[2]),
                                        ax[0].wrapped(p[0]),   ax[1].wrapped(p[1]),   ax[2].wrapped(p[2])};
    };
    bool pure = true;
    for (std::size_t w = 0; w < plan.windows && pure; ++w)
      for (std::size_t q = 0; q < N && pure; ++q) {
        const auto tq = plan.gather[w * N + q];
        if (tq < 0) continue;
        for (std::size_t k = 0; k < N; ++k) {
          const auto tk = plan.gather[w * N + k];
          const bool visible = tk >= 0 && region(tq) == region(tk);
          const bool blocked =
              !plan.blocked.empty() && plan.blocked[(plan.mask_of_window[w] * N + q) * N + k] != 0;
          blocked_pairs += blocked;
          if (visible == blocked) {
            pure = false;
            break;
          }
        }
      }
    out.expect(pure, fmt("case %d: attention mask differs from the region oracle", c));
  }
  out.note(fmt("100 cases, %zu blocked pairs checked", blocked_pairs));
}

// ---------------------------------------------------------------- training

struct TrainingState {
  std::vector<training::TrainingSample> samples;
  data::SyntheticPatch held_out;
  std::unique_ptr<training::Model> model;
  pipeline::TrainingRunConfig pretrain;
  bool pretrained = false;
};

constexpr std::size_t kTrainPatches = 16;
constexpr std::uint64_t kWorldSeed = 1, kModelSeed = 7, kRunSeed = 3;

TrainingState make_state(const fs::path& configs) {
  TrainingState s;
  auto world = data::synthetic_config_from_json(pipeline::read_json_file(configs / "world.json"));
  world.seed = kWorldSeed;
  for (std::size_t i = 0; i < kTrainPatches; ++i)
    s.samples.push_back(pipeline::to_training_sample(data::synth_generate(world, i)));
  s.held_out = data::synth_generate(world, kTrainPatches);
  s.pretrain = pipeline::training_run_config_from_json(pipeline::read_json_file(configs / "pretrain.json"),
                                                       training::Phase::kPretrain);
  s.model = std::make_unique<training::Model>(s.pretrain.model, kModelSeed);
  return s;
}

void run_pretraining(TrainingState& s, Outcome* out) {
  const double delta = s.pretrain.training.huber_delta;
  const double before = training::mean_huber_loss(*s.model, s.samples, delta);
  const auto t0 = Clock::now();
  training::RunOptions ro;
  ro.seed = kRunSeed;
  training::run_pretrain(*s.model, s.samples, s.pretrain.training, ro);
  const double secs = seconds_since(t0);
  const double after = training::mean_huber_loss(*s.model, s.samples, delta);
  s.pretrained = true;
  if (!out) return;
  const double cut = 1.0 - after / before;
  out->expect(s.pretrain.training.total_steps == 500, "pretrain config does not run 500 steps");
  out->expect(cut > 0.9, fmt("Huber loss %.4f -> %.4f (%.1f%%)", before, after, 100 * cut));
  out->expect(secs < 1800.0, fmt("runtime %.0f s", secs));
  out->note(fmt("Huber loss %.3f -> %.3f (-%.1f%%) over %zu steps, %.0f s", before, after, 100 * cut,
                s.pretrain.training.total_steps, secs));
}

void finetune_contract(Outcome& out, TrainingState& s, const fs::path& configs) {
  if (!s.pretrained) run_pretraining(s, nullptr);
  const auto run = pipeline::training_run_config_from_json(pipeline::read_json_file(configs / "finetune.json"),
                                                           training::Phase::kFinetune);
  auto& m = *s.model;
  std::vector<training::FinetuneTarget> targets;
  for (const auto& x : s.samples) targets.push_back(training::prepare_finetune_target(m, x.input, run.growth));
  training::freeze_for_phase(m, training::Phase::kFinetune);

  const auto backbone = nn::parameter_checksum(m.parameters(), {model::kPredictionHeadPrefix}, true);
  std::map<std::string, std::vector<float>> snapshot;
  for (const auto& p : m.parameters().all())
    if (p.name.rfind(model::kPredictionHeadPrefix, 0) != 0)
      snapshot[p.name].assign(p.tensor.values().begin(), p.tensor.values().end());

  const double before = training::mean_growth_loss(m, targets, run.growth);
  const auto t0 = Clock::now();
  training::RunOptions ro;
  ro.seed = kRunSeed;
  training::run_finetune(m, targets, run.training, run.growth, ro);
  const double secs = seconds_since(t0);
  const double after = training::mean_growth_loss(m, targets, run.growth);

  // (a)
  out.expect(nn::parameter_checksum(m.parameters(), {model::kPredictionHeadPrefix}, true) == backbone,
             "backbone checksum changed");
  for (const auto& p : m.parameters().all()) {
    auto it = snapshot.find(p.name);
    if (it == snapshot.end()) continue;
    const auto v = p.tensor.values();
    out.expect(std::equal(v.begin(), v.end(), it->second.begin(), it->second.end()), "parameter " + p.name + " changed");
  }
  // (b)
  const double cut = 1.0 - after / before;
  out.expect(run.training.total_steps == 200, "finetune config does not run 200 steps");
  out.expect(cut > 0.9, fmt("growth loss %.4f -> %.4f (%.1f%%)", before, after, 100 * cut));
  // (c)
  const auto pred = m.forward(pipeline::to_training_sample(s.held_out).input).prediction;
  const auto v = pred.values();
  const auto& dy = s.held_out.disturbance_year;
  const std::size_t Y = s.held_out.truth.depth, H = dy.rows, W = dy.cols;
  std::size_t undisturbed = 0, ok = 0;
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      if (dy.at(r, c) != 0) continue;
      ++undisturbed;
      int drops = 0;
      for (std::size_t y = 1; y < Y; ++y) drops += v[(y - 1) * H * W + r * W + c] - v[y * H * W + r * W + c] > 2.0;
      ok += drops <= 1;
    }
  const double share = undisturbed ? static_cast<double>(ok) / static_cast<double>(undisturbed) : 0.0;
  out.expect(undisturbed > 0, "held-out patch has no undisturbed pixels");
  out.expect(share >= 0.95, fmt("held-out share %.4f", share));
  out.note(fmt("backbone %s unchanged; growth loss %.3f -> %.3f (-%.1f%%); held-out %zu/%zu pixels (%.1f%%); %.0f s",
               nn::checksum_hex(backbone).c_str(), before, after, 100 * cut, ok, undisturbed, 100 * share, secs));
}

// ---------------------------------------------------------------- footprint

void footprint(Outcome& out) {
  const double sigma = data::sigma_for_square_fraction(10.0, 0.4057);
  const double centred = data::footprint_fraction(sigma, data::square_at(0, 0, 10.0));
  out.expect(std::abs(centred - 0.4057) <= 1e-4, fmt("centred square %.6f", centred));

  // Rectangle quadrature against the closed form over random rectangles.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0), w(0.5, 25.0), sg(2.0, 10.0);
  double worst_rect = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), y = u(rng);
    const data::Rect r{x, y, x + w(rng), y + w(rng)};
    const double s = sg(rng);
    worst_rect = std::max(worst_rect, std::abs(data::rect_fraction(s, r) - data::rect_fraction_quadrature(s, r)));
  }
  out.expect(worst_rect <= 1e-6, fmt("rectangle quadrature deviation %.3g", worst_rect));

  // Disc quadrature: centred discs have a closed form, and refining the
  // tolerance must not move offset discs by more than 1e-6.
  double worst_disc = 0.0;
  for (double r : {1.0, 5.0, 12.5, 40.0})
    worst_disc = std::max(worst_disc, std::abs(data::disc_fraction(sigma, {0, 0, r}) -
                                               (1.0 - std::exp(-r * r / (2 * sigma * sigma)))));
  for (double cx : {3.0, 15.0, 25.0})
    worst_disc = std::max(worst_disc, std::abs(data::disc_fraction(sigma, {cx, 2.0, 7.0}, 1e-6) -
                                               data::disc_fraction(sigma, {cx, 2.0, 7.0}, 1e-11)));
  // A disc inscribed between two squares is bracketed by their closed forms.
  const double inner = data::rect_fraction(sigma, data::square_at(4, 0, 6.0 * std::sqrt(2.0)));
  const double disc = data::disc_fraction(sigma, {4, 0, 6.0});
  const double outer = data::rect_fraction(sigma, data::square_at(4, 0, 12.0));
  out.expect(inner <= disc && disc <= outer, "disc not bracketed by its squares");
  out.expect(worst_disc <= 1e-6, fmt("disc quadrature deviation %.3g", worst_disc));

  const double offset = data::footprint_fraction(sigma, data::Disc{15.0, 0.0, 7.0});
  out.expect(std::abs(offset - 0.0415) <= 0.005, fmt("offset disc %.4f", offset));
  out.note(fmt("sigma %.6f m, centred %.6f, offset disc %.2f%%, quadrature deviation %.1g / %.1g", sigma, centred,
               100 * offset, worst_rect, worst_disc));
}

// ---------------------------------------------------------------- metrics

bool close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

void compare_bins(Outcome& out, const std::vector<eval::QuartileBin>& got, const std::vector<oracle::Bin>& want,
                  const std::string& what) {
  out.expect(got.size() == want.size(), what + ": bin count");
  for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
    const auto& v = want[i].values;
    out.expect(got[i].lo == want[i].lo && got[i].count == v.size(), what + fmt(": bin %zu layout", i));
    out.expect(close(got[i].median, oracle::quantile(v, 0.5)) && close(got[i].q1, oracle::quantile(v, 0.25)) &&
                   close(got[i].q3, oracle::quantile(v, 0.75)),
               what + fmt(": bin %zu quartiles", i));
  }
}

void metric_oracles(Outcome& out) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> h(0.0, 45.0), e(-6.0, 6.0), pos(0.0, 2000.0), unit(0.0, 1.0);
  std::size_t compared = 0;
  for (int round = 0; round < 5; ++round) {
    std::vector<eval::PairedSample> s(2000);
    std::vector<oracle::Sample> o;
    for (auto& x : s) {
      x.label = h(rng);
      x.predicted = std::max(0.0, x.label + e(rng));
      x.x = pos(rng);
      x.y = pos(rng);
      o.push_back({x.predicted, x.label, x.x, x.y});
    }
    const auto want = oracle::report(o, 5.0);
    const auto rp = eval::metric_report(s, 5.0, eval::R2Kind::kSquaredPearson);
    const auto rd = eval::metric_report(s, 5.0, eval::R2Kind::kDetermination);
    out.expect(rp.n == want.n && close(rp.mae, want.mae) && close(rp.mse, want.mse) && close(rp.rmse, want.rmse) &&
                   close(rp.mape, want.mape) && close(rp.iqr_mae, want.iqr_mae) && close(rp.iqr_mse, want.iqr_mse) &&
                   close(rp.iqr_mape, want.iqr_mape) && close(rp.r2, want.r2_pearson) &&
                   close(rp.r2_all, want.r2_all) && close(rd.r2, want.r2_det),
               fmt("metric_report, round %d", round));

    std::vector<double> labels, errors;
    for (const auto& x : s) {
      labels.push_back(x.label);
      errors.push_back(std::abs(x.predicted - x.label));
    }
    compare_bins(out, eval::height_binned_errors(s, 5.0), oracle::bin_by(labels, errors, 5.0), "height bins");

    const std::size_t R = 25, C = 30;
    Grid2<double> start(R, C), end(R, C);
    for (auto& v : start.values) v = h(rng);
    for (auto& v : end.values) v = h(rng);
    const auto cs = eval::change_scatter(start, end, 5.0, 1.0);
    std::vector<double> keys, vals;
    bool flags = true;
    for (std::size_t i = 0; i < start.size(); ++i) {
      const bool dist = end.values[i] < start.values[i] - 5.0;
      flags &= static_cast<bool>(cs.disturbed.values[i]) == dist;
      if (dist) continue;
      keys.push_back(start.values[i]);
      vals.push_back(end.values[i]);
    }
    out.expect(flags, "change_scatter flags");
    compare_bins(out, cs.bins, oracle::bin_by(keys, vals, 1.0), "change_scatter");

    const std::size_t Y = 4;
    Grid3<double> series(Y, 12, 12);
    for (auto& v : series.values) v = h(rng);
    const std::size_t P = 144;
    const auto curves = eval::growth_curves(series, 2.0);
    std::vector<double> first(series.values.begin(), series.values.begin() + P);
    for (std::size_t y = 1; y < Y; ++y) {
      std::vector<double> d(P);
      for (std::size_t i = 0; i < P; ++i) d[i] = series.values[y * P + i] - series.values[i];
      const auto bins = oracle::bin_by(first, d, 2.0);
      out.expect(curves.size() == bins.size(), "growth_curves bin count");
      for (std::size_t b = 0; b < std::min(curves.size(), bins.size()); ++b) {
        const auto& v = bins[b].values;
        out.expect(curves[b].lo == bins[b].lo && curves[b].count == v.size() &&
                       close(curves[b].area_m2, 100.0 * v.size()) &&
                       close(curves[b].median[y - 1], oracle::quantile(v, 0.5)) &&
                       close(curves[b].q1[y - 1], oracle::quantile(v, 0.25)) &&
                       close(curves[b].q3[y - 1], oracle::quantile(v, 0.75)),
                   fmt("growth_curves bin %zu year %zu", b, y));
      }
    }

    std::vector<eval::SpatialPoint> pts(250);
    for (auto& p : pts) {
      p = {pos(rng) / 2, pos(rng) / 2, 0.0};
      p.value = std::sin(p.x / 150.0) + unit(rng);
    }
    const auto lags = eval::spatial_autocorrelation(pts, 50.0, 500.0);
    const auto lag_ref = oracle::lag_pairs(pts, 50.0, 500.0);
    out.expect(lags.size() == lag_ref.size(), "lag bin count");
    for (std::size_t k = 0; k < std::min(lags.size(), lag_ref.size()); ++k) {
      out.expect(lags[k].pairs == lag_ref[k].pairs, fmt("lag %zu pairs", k));
      out.expect(lags[k].correlation.has_value() &&
                     close(*lags[k].correlation, oracle::pearson(lag_ref[k].a, lag_ref[k].b)),
                 fmt("lag %zu correlation", k));
    }
    compared += s.size();
  }

  std::vector<eval::PairedSample> hand(2);
  hand[0].label = 10;
  hand[0].predicted = 12;
  hand[1].label = 20;
  hand[1].predicted = 16;
  const auto r = eval::metric_report(hand);
  out.expect(std::abs(r.mae - 3.0) <= 1e-12 && std::abs(r.mse - 10.0) <= 1e-12 && std::abs(r.mape - 20.0) <= 1e-12,
             fmt("hand example MAE %g MSE %g MAPE %g", r.mae, r.mse, r.mape));
  out.note(fmt("5 randomized rounds (%zu samples) against loop references; hand example MAE %g, MSE %g, MAPE %g%%",
               compared, r.mae, r.mse, r.mape));
}

// ---------------------------------------------------------------- data contracts

void data_contracts(Outcome& out) {
  // Channel ranges as tabulated: optical bands by name, radar in dB.
  const std::vector<std::tuple<const char*, double, double>> table{
      {"s2_b01", 0, 1000},   {"s2_b02", 0, 2000},   {"s2_b03", 0, 2000},   {"s2_b04", 0, 2000},
      {"s2_b05", 0, 2000},   {"s2_b06", 0, 4000},   {"s2_b07", 0, 6000},   {"s2_b08", 0, 6000},
      {"s2_b8a", 0, 6000},   {"s2_b09", 0, 6000},   {"s2_b11", 0, 4000},   {"s2_b12", 0, 4000},
      {"s1_vh_asc", -50, 1}, {"s1_vh_desc", -50, 1}, {"palsar_hh", -50, 1}, {"palsar_hv", -50, 1},
      {"dem", 0, 7000},      {"forest_class", 0, 2}};
  const auto spec = data::NormalizationSpec::standard();
  out.expect(spec.channels.size() == table.size(), "channel count");
  for (const auto& [name, lo, hi] : table) {
    const auto& r = spec.find(name);
    out.expect(data::normalize_value(lo, r) == -1.0 && data::normalize_value(hi, r) == 1.0 &&
                   data::normalize_value(0.5 * (lo + hi), r) == 0.0,
               std::string("endpoints of ") + name);
  }

  data::GediShot shot;
  shot.rh98 = 25.0;
  shot.beam_power = data::BeamPower::kHigh;
  shot.num_modes = 2;
  shot.quality_flag = 1;
  shot.degrade_flag = 0;
  shot.sensitivity = 0.97;
  auto with = [&](auto mutate) {
    auto s = shot;
    mutate(s);
    return data::gedi_quality_filter(s);
  };
  out.expect(with([](data::GediShot& s) { s.sensitivity = 0.95; }).accepted, "sensitivity 0.95 rejected");
  out.expect(!with([](data::GediShot& s) { s.sensitivity = 0.94; }).accepted, "sensitivity 0.94 accepted");
  out.expect(with([](data::GediShot& s) { s.rh98 = 150.0; }).accepted, "rh98 150 rejected");
  out.expect(!with([](data::GediShot& s) { s.rh98 = 151.0; }).accepted, "rh98 151 accepted");

  // Split: per-axis gaps between the two squares.
  const data::Rect test_area = data::square_at(0.0, 0.0, 960.0);
  std::mt19937_64 rng(360);
  std::uniform_real_distribution<double> pos(-4000.0, 4000.0);
  std::vector<data::PatchCenter> patches(10000);
  for (auto& p : patches) p = {pos(rng), pos(rng)};
  const auto kept = data::split_min_distance(patches, test_area);
  std::vector<std::size_t> want;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const data::Rect r = data::square_at(patches[i].x, patches[i].y, 960.0);
    const double gap_x = std::max({0.0, r.x_min - test_area.x_max, test_area.x_min - r.x_max});
    const double gap_y = std::max({0.0, r.y_min - test_area.y_max, test_area.y_min - r.y_max});
    if (std::hypot(gap_x, gap_y) >= 360.0) want.push_back(i);
  }
  out.expect(kept == want, fmt("split kept %zu, brute force %zu", kept.size(), want.size()));
  out.note(fmt("%zu channel ranges, GEDI boundaries, split keeps %zu of 10000", table.size(), kept.size()));
}

// ---------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

void determinism(Outcome& out, const fs::path& cli, const fs::path& configs) {
  const fs::path root = fs::temp_directory_path() / "canopy_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto pre = pipeline::read_json_file(configs / "pretrain.json");
  pre["training"]["total_steps"] = 10;
  pre["training"]["checkpoint_every"] = 5;
  auto ft = pipeline::read_json_file(configs / "finetune.json");
  ft["training"]["total_steps"] = 10;
  ft["training"]["batch_size"] = 4;
  std::ofstream(root / "pretrain.json") << pre.dump(2);
  std::ofstream(root / "finetune.json") << ft.dump(2);

  const std::string exe = "\"" + cli.string() + "\"";
  std::size_t files = 0;
  std::vector<std::map<std::string, std::string>> outputs;
  for (const char* rep : {"a", "b"}) {
    const fs::path d = root / rep;
    const std::string data = (d / "synth").string(), pt = (d / "pretrain").string(), fn = (d / "finetune").string();
    const int rc_s = run(exe + " synth --config " + (configs / "world.json").string() + " --out " + data +
                         " --patches 4 --seed 21");
    const int rc_p = run(exe + " pretrain --config " + (root / "pretrain.json").string() + " --data " + data +
                         " --out " + pt + " --seed 21");
    const int rc_f = run(exe + " finetune --config " + (root / "finetune.json").string() + " --data " + data +
                         " --out " + fn + " --seed 21 --checkpoint " + pt + "/checkpoint.cnpy --freeze-backbone");
    out.expect(rc_s == 0 && rc_p == 0 && rc_f == 0, fmt("run %s exit codes %d/%d/%d", rep, rc_s, rc_p, rc_f));
    outputs.push_back(tree(d));
    files = outputs.back().size();
  }
  for (const char* name : {"synth/patch_0000.cnpy", "synth/patch_0003.cnpy", "pretrain/checkpoint.cnpy",
                           "pretrain/loss.csv", "finetune/checkpoint.cnpy", "finetune/loss.csv"})
    out.expect(outputs[0].count(name) == 1, std::string("missing ") + name);
  out.expect(outputs[0].size() == outputs[1].size(), "different file sets");
  for (const auto& [name, bytes] : outputs[0]) {
    auto it = outputs[1].find(name);
    out.expect(it != outputs[1].end() && it->second == bytes, name + " differs");
  }
  out.note(fmt("synth, pretrain 10 steps, finetune 10 steps twice: %zu files byte-identical (manifest.json excluded)",
               files));
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canopy acceptance suite"};
  std::string only;
  fs::path configs = CANOPY_CONFIG_DIR, golden = CANOPY_GOLDEN_DIR, cli = CANOPY_CLI_PATH;
  app.add_option("--only", only, "Comma-separated criterion numbers");
  app.add_option("--configs", configs, "Config directory");
  app.add_option("--cli", cli, "Path of the canopy executable");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) selected.insert(std::stoi(tok));

  std::unique_ptr<TrainingState> state;
  auto training_state = [&]() -> TrainingState& {
    if (!state) state = std::make_unique<TrainingState>(make_state(configs));
    return *state;
  };

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"growth oracle suite", growth_oracle_suite},
      {"worked growth examples", worked_examples},
      {"full-scale shape ladder", [&](Outcome& o) { shape_ladder(o, golden / "describe_full_scale.txt"); }},
      {"tiny model gradient check", tiny_gradcheck},
      {"window partition and mask purity", window_partition},
      {"pretraining overfit", [&](Outcome& o) { run_pretraining(training_state(), &o); }},
      {"fine-tuning contract", [&](Outcome& o) { finetune_contract(o, training_state(), configs); }},
      {"footprint model", footprint},
      {"metric oracles", metric_oracles},
      {"normalization and filter contracts", data_contracts},
      {"determinism", [&](Outcome& o) { determinism(o, cli, configs); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    failed += !o.passed();
    std::printf("[%s] %2d. %s: %s\n", o.passed() ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                o.detail().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
