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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/container.hpp"
#include "common/error.hpp"
#include "doctest.h"
#include "pipeline/commands.hpp"

using namespace canopy;
using namespace canopy::pipeline;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("canopy_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_CASE("growth config JSON") {
  growth::GrowthConfig g;
  g.s_max = 2.0;
  g.norm = growth::LossNorm::kL1;
  const auto back = growth_config_from_json(to_json(g));
  CHECK(back.s_max == 2.0);
  CHECK(back.norm == growth::LossNorm::kL1);
  CHECK(growth_config_from_json(nlohmann::json::object()).pool_size == 3);
  CHECK_THROWS_AS(growth_config_from_json({{"pool", 3}}), Error);
  CHECK_THROWS_AS(growth_config_from_json({{"norm", "l3"}}), Error);
  CHECK_THROWS_AS(growth_config_from_json({{"s_min", 4.0}, {"s_max", 3.0}}), Error);
}

TEST_CASE("training run config sections belong to their phase") {
  const nlohmann::json pre{{"training", {{"phase", "pretrain"}, {"total_steps", 5}}}};
  const auto run = training_run_config_from_json(pre, training::Phase::kPretrain);
  CHECK(run.training.total_steps == 5);
  CHECK(run.model.height == model::ModelConfig::desk_scale().height);
  CHECK_THROWS_AS(training_run_config_from_json(pre, training::Phase::kFinetune), Error);

  auto with_growth = pre;
  with_growth["growth"] = nlohmann::json::object();
  CHECK_THROWS_AS(training_run_config_from_json(with_growth, training::Phase::kPretrain), Error);
  const nlohmann::json ft{{"training", {{"phase", "finetune"}}}, {"model", model::to_json(model::ModelConfig::desk_scale())}};
  CHECK_THROWS_AS(training_run_config_from_json(ft, training::Phase::kFinetune), Error);
  CHECK_THROWS_AS(training_run_config_from_json({{"training", {{"phase", "pretrain"}}}, {"extra", 1}},
                                                training::Phase::kPretrain),
                  Error);
}

TEST_CASE("pseudolabel command") {
  const auto d = temp_dir("pseudo");
  write_text(d / "series.csv", "y1,y2,y3,y4,y5,y6,y7\n20,21,22,5,6,7,8\n12,12,12,12,12,12,12\n0,0,0,0,0,0,0\n");
  const auto out = cmd_pseudolabel({d / "series.csv", std::nullopt, d / "out"});
  CHECK(read_text(out).rfind("y1,y2,y3,y4,y5,y6,y7,split_year\n", 0) == 0);
  const auto rows = read_rows(out);
  REQUIRE(rows.size() == 3);
  const std::vector<double> first{20, 21, 22, 5, 6, 7, 8, 3};
  for (std::size_t i = 0; i < 8; ++i) CHECK(rows[0][i] == doctest::Approx(first[i]).epsilon(1e-9));
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(rows[1][i] == doctest::Approx(12.0));
    CHECK(rows[2][i] == doctest::Approx(0.0));
  }
  CHECK(rows[1][7] == 7);
  CHECK(fs::exists(d / "out" / "manifest.json"));

  write_text(d / "three.csv", "y1,y2,y3\n10,9,8\n0,10,20\n");
  const auto r3 = read_rows(cmd_pseudolabel({d / "three.csv", std::nullopt, d / "out3"}));
  CHECK(r3[0] == std::vector<double>{9, 9, 9, 3});
  CHECK(r3[1] == std::vector<double>{7, 10, 13, 3});

  write_text(d / "empty.csv", "");
  CHECK(read_text(cmd_pseudolabel({d / "empty.csv", std::nullopt, d / "out4"})).empty());

  write_text(d / "ragged.csv", "y1,y2,y3\n1,2,3\n1,2\n");
  CHECK(kind_of([&] { cmd_pseudolabel({d / "ragged.csv", std::nullopt, d / "out5"}); }) == ErrorKind::kData);
  write_text(d / "negative.csv", "y1,y2\n1,-2\n");
  CHECK(kind_of([&] { cmd_pseudolabel({d / "negative.csv", std::nullopt, d / "out6"}); }) == ErrorKind::kData);
  write_text(d / "header.csv", "a,b\n1,2\n");
  CHECK(kind_of([&] { cmd_pseudolabel({d / "header.csv", std::nullopt, d / "out7"}); }) == ErrorKind::kData);
  CHECK(kind_of([&] { cmd_pseudolabel({d / "missing.csv", std::nullopt, d / "out8"}); }) == ErrorKind::kIo);
}

TEST_CASE("disturbance command pools per pixel years") {
  const auto d = temp_dir("dist");
  // 3 years on a 4x4 grid; one pixel drops after year 1.
  Grid3<float> z(3, 4, 4, 25.0f);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t i = 0; i < 16; ++i) z.values[y * 16 + i] = 25.0f + static_cast<float>(y);
  z.values[1 * 16 + 0] = 3.0f;
  z.values[2 * 16 + 0] = 4.0f;
  write_grid(d / "grid.cnpy", {{"reference", z}});
  const auto s = cmd_disturbance({d / "grid.cnpy", "reference", std::nullopt, d / "out"});
  REQUIRE(s.years == 3);
  // Pixel (0,0) has index 1; the 3x3 pool spreads it to its neighbours.
  CHECK(s.counts == std::vector<std::size_t>{4, 0, 12});
  const auto c = read_container(d / "out" / "disturbance.cnpy");
  const auto idx = c.get("disturbance_index").as<std::int32_t>();
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 1);
  CHECK(idx[5] == 1);
  CHECK(idx[2] == 3);
  CHECK(read_text(d / "out" / "disturbance_summary.csv") == "year,pixels\n1,4\n2,0\n3,12\n");

  CHECK(kind_of([&] { cmd_disturbance({d / "grid.cnpy", "prediction", std::nullopt, d / "o2"}); }) ==
        ErrorKind::kData);
  write_grid(d / "one.cnpy", {{"reference", Grid3<float>(1, 2, 2, 5.0f)}});
  CHECK(kind_of([&] { cmd_disturbance({d / "one.cnpy", "reference", std::nullopt, d / "o3"}); }) == ErrorKind::kData);
}

TEST_CASE("describe presets") {
  CHECK(cmd_describe("full", std::nullopt) == model::describe(model::ModelConfig::full_scale()));
  CHECK(cmd_describe("tiny", std::nullopt) == model::describe(model::ModelConfig::tiny_scale()));
  CHECK_THROWS_AS(cmd_describe("huge", std::nullopt), Error);
  const auto d = temp_dir("describe");
  write_text(d / "m.json", model::to_json(model::ModelConfig::desk_scale()).dump());
  CHECK(cmd_describe("full", d / "m.json") == model::describe(model::ModelConfig::desk_scale()));
}

TEST_CASE("manifest records the run") {
  const auto d = temp_dir("manifest");
  write_manifest(d, {"synth", fs::path("world.json"), 7, {}, {d / "a"}, {{"patches", 2}}, utc_timestamp()});
  const auto j = read_json_file(d / "manifest.json");
  CHECK(j["command"] == "synth");
  CHECK(j["seed"] == 7);
  CHECK(j["tool_version"] == kVersion);
  CHECK(j["parameters"]["patches"] == 2);
  CHECK(j.contains("started_at"));
  CHECK(j.contains("finished_at"));
}

TEST_CASE("synth, predict and evaluate fit together") {
  const auto d = temp_dir("chain");
  auto world = data::SyntheticWorldConfig{};
  write_text(d / "world.json", data::to_json(world).dump());
  const auto patches = cmd_synth({d / "world.json", d / "data", 2, 4});
  REQUIRE(patches.size() == 2);
  CHECK(list_patches(d / "data") == patches);
  CHECK(data::read_patch(patches[1]).index == 1);

  // A grid holding the truth as "prediction" evaluates perfectly.
  const auto p = data::read_patch(patches[0]);
  write_grid(d / "perfect.cnpy", {{"prediction", p.truth}});
  const auto r = cmd_evaluate({d / "perfect.cnpy", "prediction", patches[0], true, 5.0, 5.0,
                               eval::R2Kind::kSquaredPearson, d / "eval"});
  CHECK(r.mae == 0.0);
  CHECK(r.n_all == p.truth.size());
  CHECK(r.n <= r.n_all);
  for (const char* f : {"report.txt", "report.csv", "height_bins.csv", "change_scatter.csv", "growth_curves.csv",
                        "autocorrelation.csv", "manifest.json"})
    CHECK(fs::exists(d / "eval" / f));

  write_grid(d / "small.cnpy", {{"prediction", Grid3<float>(3, 4, 4)}});
  CHECK(kind_of([&] {
          cmd_evaluate({d / "small.cnpy", "prediction", patches[0], false, 5.0, 5.0, eval::R2Kind::kSquaredPearson,
                        d / "e2"});
        }) == ErrorKind::kData);
}
