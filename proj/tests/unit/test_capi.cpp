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

// Exercises the C interface through the shared library only.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "canopy/canopy.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Ctx {
  canopy_context* ctx = canopy_context_new();
  ~Ctx() { canopy_context_free(ctx); }
  std::string error() const { return canopy_last_error(ctx); }
};

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("canopy_test_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("context, version and errors") {
  CHECK(std::string(canopy_version()) == "0.1.0");
  Ctx c;
  REQUIRE(c.ctx != nullptr);
  CHECK(c.error().empty());
  double f = 0.0;
  CHECK(canopy_footprint_plane(c.ctx, -1.0, &f) == CANOPY_ERROR_USAGE);
  CHECK_FALSE(c.error().empty());
  CHECK(canopy_footprint_plane(c.ctx, 2.0, &f) == CANOPY_OK);
  CHECK(f == 1.0);
  CHECK(c.error().empty());
  CHECK(canopy_footprint_plane(c.ctx, 2.0, nullptr) == CANOPY_ERROR_USAGE);

  canopy_model* m = nullptr;
  CHECK(canopy_model_load(c.ctx, "/nonexistent/checkpoint.cnpy", &m) == CANOPY_ERROR_DATA);
  CHECK(m == nullptr);
  CHECK(c.error().find("nonexistent") != std::string::npos);
  canopy_model_free(nullptr);
  canopy_string_free(nullptr);
}

TEST_CASE("footprint through the C interface") {
  Ctx c;
  double sigma = 0.0, f = 0.0;
  REQUIRE(canopy_footprint_solve_sigma(c.ctx, 10.0, 0.4057, &sigma) == CANOPY_OK);
  CHECK(sigma == doctest::Approx(5.497158).epsilon(1e-6));
  REQUIRE(canopy_footprint_rect(c.ctx, sigma, -5, -5, 5, 5, &f) == CANOPY_OK);
  CHECK(std::abs(f - 0.4057) < 1e-4);
  REQUIRE(canopy_footprint_disc(c.ctx, sigma, 15, 0, 7, &f) == CANOPY_OK);
  CHECK(std::abs(f - 0.0415) < 0.005);
  CHECK(canopy_footprint_solve_sigma(c.ctx, 10.0, 1.0, &sigma) == CANOPY_ERROR_NUMERICAL);
  CHECK(canopy_footprint_rect(c.ctx, 1.0, 0, 0, 0, 1, &f) == CANOPY_ERROR_USAGE);
}

TEST_CASE("pseudolabel and describe") {
  Ctx c;
  const auto d = temp_dir("pseudo");
  std::ofstream(d / "s.csv") << "y1,y2,y3,y4,y5,y6,y7\n20,21,22,5,6,7,8\n";
  REQUIRE(canopy_pseudolabel(c.ctx, (d / "s.csv").c_str(), nullptr, (d / "o").c_str()) == CANOPY_OK);
  std::ifstream in(d / "o" / "pseudo_labels.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row == "20,21,22,5,6,7,8,3");
  CHECK(canopy_pseudolabel(c.ctx, (d / "missing.csv").c_str(), nullptr, (d / "o").c_str()) == CANOPY_ERROR_DATA);
  CHECK(canopy_pseudolabel(c.ctx, nullptr, nullptr, (d / "o").c_str()) == CANOPY_ERROR_USAGE);

  char* text = nullptr;
  REQUIRE(canopy_describe(c.ctx, "full", nullptr, &text) == CANOPY_OK);
  CHECK(std::strstr(text, "(84,96,96,72)") != nullptr);
  canopy_string_free(text);
  CHECK(canopy_describe(c.ctx, "huge", nullptr, &text) == CANOPY_ERROR_USAGE);
}

TEST_CASE("gradcheck and option defaults") {
  Ctx c;
  canopy_gradcheck_options o;
  canopy_gradcheck_options_init(&o);
  o.linear = 1;
  canopy_gradcheck_result r{};
  REQUIRE(canopy_gradcheck(c.ctx, &o, &r) == CANOPY_OK);
  CHECK(r.passed == 1);
  CHECK(r.tolerance == 1e-8);
  CHECK(r.checks > 0);

  canopy_train_options t;
  canopy_train_options_init(&t);
  CHECK(t.freeze_backbone == 0);
  CHECK(t.resume_path == nullptr);
  CHECK(canopy_pretrain(c.ctx, &t, nullptr) == CANOPY_ERROR_USAGE);

  canopy_evaluate_options e;
  canopy_evaluate_options_init(&e);
  CHECK(std::string(e.array) == "prediction");
  CHECK(e.floor == 5.0);
  CHECK(e.bin_width == 5.0);
  CHECK(e.r2 == CANOPY_R2_PEARSON);

  size_t counts[2];
  size_t years = 0;
  CHECK(canopy_disturbance(c.ctx, "/nonexistent.cnpy", nullptr, nullptr, "/tmp", counts, 2, &years) ==
        CANOPY_ERROR_DATA);
}
