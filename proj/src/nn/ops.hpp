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

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nn/tensor.hpp"

namespace canopy::nn {

// Elementwise, same-shape.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes);

// Treats `a` as rows of `row_width` values and stacks rows index[i]; a
// negative index yields a zero row. The result is reshaped to `out_shape`.
// Backward scatter-adds, so repeated indices accumulate.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, std::size_t row_width, const std::vector<std::int64_t>& index,
                      Shape out_shape);

// Flat concatenation of a then b, reshaped to `out_shape`.
template <typename T> Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, Shape out_shape);

// x[..., K] * weight[K, M] (+ bias[M]) over the last axis.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias = {});

// Normalises over the last axis, then applies gamma/beta of that extent.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));

// Channel-first x[C, ...]; each of `groups` consecutive channel blocks is
// normalised over its channels and all trailing extents.
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

// Zero-padded "same" 3D cross-correlation: x[Ci,T,H,W], kernel[Co,Ci,kT,kH,kW]
// with odd kernel extents, optional bias[Co]. Output [Co,T,H,W].
template <typename T>
Tensor<T> conv3d_same(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias = {});

// Additive attention mask of shape [mask_groups, N, M]. Query group g uses
// slice group_of[g] when `group_of` is set, else g % mask_groups. Entries are
// 0 (allowed) or a large negative value.
template <typename T>
struct AttentionMask {
  std::shared_ptr<const std::vector<T>> values;
  std::size_t groups = 0;
  std::shared_ptr<const std::vector<std::uint32_t>> group_of;
};

// Grouped scaled dot-product attention. q[G,N,E], k[G,M,E], v[G,M,E] are split
// into `heads` heads of E/heads channels; each group attends only within
// itself. `bias` is an optional learned [N,M,heads] logit offset shared by
// all groups. Scaling is 1/sqrt(E/heads). Output [G,N,E].
template <typename T>
Tensor<T> windowed_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t heads,
                             const Tensor<T>& bias = {}, const AttentionMask<T>& mask = {});

// Value large enough to zero a softmax weight in both precisions.
template <typename T>
constexpr T kMaskedLogit = T(-1e9);

// Test hook: corrupts one backward kernel so the gradient checker has a
// genuine bug to catch.
enum class FaultInjection { kNone, kLayerNormBackward };
void set_fault_injection(FaultInjection fault);
FaultInjection fault_injection();

}  // namespace canopy::nn
