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

#include "model/config.hpp"

#include <cmath>
#include <set>

#include "common/error.hpp"

namespace canopy::model {

void ModelConfig::validate() const {
  require(channels > 0, "model config: channels must be positive");
  require(years >= 1 && timesteps % years == 0, "model config: timesteps ", timesteps,
          " must be a multiple of years ", years);
  require(height > 0 && width > 0 && height % 8 == 0 && width % 8 == 0, "model config: height and width must be ",
          "positive multiples of 8, got ", height, "x", width);
  require(embed_dim > 0 && embed_dim % 2 == 0, "model config: embed_dim must be positive and even");
  for (std::size_t i = 0; i < 4; ++i) {
    require(depths_enc[i] >= 1 && depths_dec[i] >= 1, "model config: depths must be >= 1");
    require(heads[i] >= 1 && embed_dim % heads[i] == 0, "model config: embed_dim ", embed_dim,
            " is not divisible by heads[", i, "] = ", heads[i]);
  }
  std::size_t prev = timesteps;
  for (std::size_t i = 0; i < 3; ++i) {
    require(reduce_time[i] < prev, "model config: reduce_time must be strictly decreasing from timesteps");
    require(reduce_time[i] % years == 0, "model config: reduce_time[", i, "] = ", reduce_time[i],
            " is not a multiple of years");
    prev = reduce_time[i];
  }
  require(reduce_time[2] == years, "model config: reduce_time must end at years (", years, "), got ", reduce_time[2]);
  require(window_t >= 1 && window_s >= 1, "model config: window sizes must be >= 1");
  require(ffn_ratio >= 1, "model config: ffn_ratio must be >= 1");
  require(norm_groups >= 1 && embed_dim % norm_groups == 0, "model config: norm_groups ", norm_groups,
          " does not divide embed_dim ", embed_dim);
  require(std::isfinite(output_scale) && output_scale > 0.0, "model config: output_scale must be positive");
}

ModelConfig ModelConfig::full_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::desk_scale() {
  ModelConfig c;
  c.timesteps = 36;
  c.height = 48;
  c.width = 48;
  c.years = 3;
  c.embed_dim = 8;
  c.depths_enc = {1, 1, 1, 1};
  c.depths_dec = {1, 1, 1, 1};
  c.heads = {1, 2, 2, 4};
  c.reduce_time = {12, 6, 3};
  c.norm_groups = 4;
  return c;
}

ModelConfig ModelConfig::tiny_scale() {
  ModelConfig c = desk_scale();
  c.channels = 4;
  c.timesteps = 12;
  c.height = 16;
  c.width = 16;
  c.heads = {1, 1, 1, 1};
  c.reduce_time = {9, 6, 3};
  return c;
}

namespace {

const std::set<std::string> kKeys = {"channels", "timesteps", "height", "width", "years", "embed_dim",
                                     "depths_enc", "depths_dec", "heads", "window_t", "window_s",
                                     "reduce_time", "ffn_ratio", "norm_groups", "output_scale"};

template <typename V>
void read(const nlohmann::json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kInvalidArgument, "model config: key '", key, "' has the wrong type");
  }
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "model config must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(kKeys.count(key) > 0, "model config: unknown key '", key, "'");
  ModelConfig c;
  read(j, "channels", c.channels);
  read(j, "timesteps", c.timesteps);
  read(j, "height", c.height);
  read(j, "width", c.width);
  read(j, "years", c.years);
  read(j, "embed_dim", c.embed_dim);
  read(j, "depths_enc", c.depths_enc);
  read(j, "depths_dec", c.depths_dec);
  read(j, "heads", c.heads);
  read(j, "window_t", c.window_t);
  read(j, "window_s", c.window_s);
  read(j, "reduce_time", c.reduce_time);
  read(j, "ffn_ratio", c.ffn_ratio);
  read(j, "norm_groups", c.norm_groups);
  read(j, "output_scale", c.output_scale);
  c.validate();
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"channels", c.channels},   {"timesteps", c.timesteps},   {"height", c.height},
          {"width", c.width},         {"years", c.years},           {"embed_dim", c.embed_dim},
          {"depths_enc", c.depths_enc}, {"depths_dec", c.depths_dec}, {"heads", c.heads},
          {"window_t", c.window_t},   {"window_s", c.window_s},     {"reduce_time", c.reduce_time},
          {"ffn_ratio", c.ffn_ratio}, {"norm_groups", c.norm_groups}, {"output_scale", c.output_scale}};
}

}  // namespace canopy::model
