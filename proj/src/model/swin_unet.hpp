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

// Temporal Swin U-Net: per-voxel patch embedding, a four-level encoder with
// temporal downsampling, a four-level decoder whose layers (except the lowest)
// start with a temporal skip connection and (except the top) end with patch
// expansion, and two heads producing Y x H x W height maps.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "model/config.hpp"
#include "model/layers.hpp"
#include "nn/ops.hpp"
#include "nn/parameters.hpp"

namespace canopy::model {

struct StageShape {
  std::string name;
  nn::Shape shape;
};

// Every intermediate shape of a forward pass, derived from the config alone.
std::vector<StageShape> plan_stages(const ModelConfig& cfg);

// Aligned two-column text of plan_stages, one stage per line.
std::string describe(const ModelConfig& cfg);

inline constexpr const char* kPredictionHeadPrefix = "head.prediction.";

template <typename T>
class TemporalSwinUnet {
 public:
  using Tensor = nn::Tensor<T>;

  struct Output {
    Tensor reference;   // [Y, H, W]
    Tensor prediction;  // [Y, H, W]

    // [2, Y, H, W], reference first.
    Tensor stacked() const;
  };

  TemporalSwinUnet(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& parameters() { return params_; }
  const nn::ParameterStore<T>& parameters() const { return params_; }

  // x: [C, T, H, W] -> tokens [T, H, W, E].
  Tensor patch_embed(const Tensor& x) const;
  // x: [C, T, H, W] -> decoder features [Y, H, W, E].
  Tensor features(const Tensor& x) const;
  Tensor reference_head(const Tensor& features) const;
  Tensor prediction_head(const Tensor& features) const;
  Output forward(const Tensor& x) const;

  // Copies parameter values by name from a model built from the same config.
  template <typename U>
  void copy_parameters_from(const TemporalSwinUnet<U>& other) {
    for (auto& p : params_.all()) {
      const auto* src = other.parameters().find(p.name);
      require(src && src->tensor.shape() == p.tensor.shape(), "parameter ", p.name, " missing or mismatched");
      auto dst = p.tensor.mutable_values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src->tensor.values()[i]);
    }
  }

 private:
  Tensor make_param(const std::string& name, nn::Shape shape, double stddev, bool decay);
  Linear<T> make_linear(const std::string& name, std::size_t in, std::size_t out, bool bias);
  Norm<T> make_norm(const std::string& name, std::size_t dim);
  Attention<T> make_attention(const std::string& name, std::size_t dim, std::size_t heads, nn::Shape bias_shape);
  Ffn<T> make_ffn(const std::string& name, std::size_t dim);
  std::vector<SwinBlock<T>> make_blocks(const std::string& prefix, std::size_t depth, std::size_t level,
                                        const Extent3& extent);
  void expect(const Tensor& t, const std::string& stage) const;

  ModelConfig cfg_;
  std::vector<StageShape> stages_;
  nn::ParameterStore<T> params_;
  std::mt19937_64 rng_;

  Linear<T> embed_;
  std::vector<std::vector<SwinBlock<T>>> encoder_;
  std::vector<Downsample<T>> down_;
  std::vector<std::vector<SwinBlock<T>>> decoder_;
  std::vector<SkipLayer<T>> skip_;  // indexed by decoder layer; entry 0 unused
  std::vector<Tensor> expand_;
  Norm<T> final_norm_;
  Linear<T> ref_head_;
  Tensor pred_conv1_w_, pred_conv1_b_, pred_conv2_w_, pred_conv2_b_, pred_out_w_, pred_out_b_;
  Norm<T> pred_gn1_, pred_gn2_;
};

extern template class TemporalSwinUnet<float>;
extern template class TemporalSwinUnet<double>;

}  // namespace canopy::model
