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

// Building blocks of the temporal Swin U-Net. Token grids are [T, H, W, E]
// row-major tensors.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "model/window.hpp"
#include "nn/ops.hpp"

namespace canopy::model {

template <typename T>
struct Linear {
  nn::Tensor<T> weight, bias;  // bias may be undefined
};

template <typename T>
struct Norm {
  nn::Tensor<T> gamma, beta;
};

template <typename T>
struct Ffn {
  Norm<T> norm;
  Linear<T> fc1, fc2;
};

// Pre-norm multi-head attention. `position_bias` is a relative-position table
// [table_size, heads] for window blocks and a dense [N, N, heads] bias for
// skip connections.
template <typename T>
struct Attention {
  Norm<T> norm;
  Linear<T> q, k, v, out;
  nn::Tensor<T> position_bias;
  std::size_t heads = 1;
};

// A window plan together with its additive mask in the working precision.
template <typename T>
struct WindowedPlan {
  WindowPlan plan;
  nn::AttentionMask<T> mask;
};

template <typename T>
WindowedPlan<T> make_windowed_plan(const Extent3& extent, const Extent3& window, bool shifted);

template <typename T>
struct SwinBlock {
  Attention<T> attn;
  Ffn<T> ffn;
  std::shared_ptr<const WindowedPlan<T>> plan;
};

template <typename T>
struct Downsample {
  nn::Tensor<T> time_weight;  // [(T_in/Y) E, (T_out/Y) E], no bias
  Norm<T> norm;               // over 4E
  nn::Tensor<T> merge_weight; // [4E, 2E], no bias
};

template <typename T>
struct SkipLayer {
  Attention<T> attn;
  Ffn<T> ffn;
};

// x + FFN(LN(x)) with a GELU hidden layer.
template <typename T>
nn::Tensor<T> ffn_forward(const nn::Tensor<T>& x, const Ffn<T>& f);

// LN -> (shifted) window attention -> residual, then the FFN residual.
template <typename T>
nn::Tensor<T> swin_block(const nn::Tensor<T>& x, const SwinBlock<T>& b);

// Per year and pixel, projects the year's T_in/Y embeddings to T_out/Y.
template <typename T>
nn::Tensor<T> temporal_project(const nn::Tensor<T>& x, const nn::Tensor<T>& weight, std::size_t years,
                               std::size_t t_out);

// Concatenates 2x2 neighbours, layer-normalises and projects 4E -> 2E.
template <typename T>
nn::Tensor<T> patch_merge(const nn::Tensor<T>& x, const Norm<T>& norm, const nn::Tensor<T>& weight);

template <typename T>
nn::Tensor<T> temporal_downsample(const nn::Tensor<T>& x, const Downsample<T>& d, std::size_t years,
                                  std::size_t t_out);

// Builds [Y H W, 1 + T_enc/Y, E] sequences: each decoder token followed by
// the encoder tokens of the same pixel and year.
template <typename T>
nn::Tensor<T> skip_sequences(const nn::Tensor<T>& dec, const nn::Tensor<T>& enc, std::size_t years);

// One pre-norm transformer layer over the sequences; only the decoder token
// of each sequence is kept. Returns a tensor shaped like the decoder input.
template <typename T>
nn::Tensor<T> temporal_skip(const nn::Tensor<T>& sequences, const SkipLayer<T>& s, const nn::Shape& dec_shape);

// Linear E -> 2E, then each token becomes a 2x2 block of E/2 embeddings.
template <typename T>
nn::Tensor<T> patch_expand(const nn::Tensor<T>& x, const nn::Tensor<T>& weight);

}  // namespace canopy::model
