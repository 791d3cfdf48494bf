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

#include "model/layers.hpp"

#include "common/error.hpp"

namespace canopy::model {

template <typename T>
WindowedPlan<T> make_windowed_plan(const Extent3& extent, const Extent3& window, bool shifted) {
  WindowedPlan<T> e;
  e.plan = make_window_plan(extent, window, shifted);
  if (!e.plan.blocked.empty()) {
    std::vector<T> values(e.plan.blocked.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = e.plan.blocked[i] ? nn::kMaskedLogit<T> : T(0);
    e.mask.values = std::make_shared<const std::vector<T>>(std::move(values));
    e.mask.groups = e.plan.mask_groups;
    e.mask.group_of = std::make_shared<const std::vector<std::uint32_t>>(e.plan.mask_of_window);
  }
  return e;
}

namespace {

template <typename T>
nn::Tensor<T> attention_core(const nn::Tensor<T>& x, const Attention<T>& a, const nn::Tensor<T>& bias,
                             const nn::AttentionMask<T>& mask) {
  auto q = nn::linear(x, a.q.weight, a.q.bias);
  auto k = nn::linear(x, a.k.weight, a.k.bias);
  auto v = nn::linear(x, a.v.weight, a.v.bias);
  auto o = nn::windowed_attention(q, k, v, a.heads, bias, mask);
  return nn::linear(o, a.out.weight, a.out.bias);
}

}  // namespace

template <typename T>
nn::Tensor<T> ffn_forward(const nn::Tensor<T>& x, const Ffn<T>& f) {
  auto h = nn::layer_norm(x, f.norm.gamma, f.norm.beta);
  h = nn::linear(nn::gelu(nn::linear(h, f.fc1.weight, f.fc1.bias)), f.fc2.weight, f.fc2.bias);
  return nn::add(x, h);
}

template <typename T>
nn::Tensor<T> swin_block(const nn::Tensor<T>& x, const SwinBlock<T>& b) {
  require(b.plan != nullptr, "swin block has no window plan");
  const auto& plan = b.plan->plan;
  require(x.rank() == 4 && x.dim(0) == plan.extent[0] && x.dim(1) == plan.extent[1] && x.dim(2) == plan.extent[2],
          "swin block: tokens ", nn::shape_str(x.shape()), " do not match the window plan");
  const std::size_t E = x.dim(3);
  const std::size_t N = plan.tokens_per_window;
  const std::size_t heads = b.attn.heads;
  auto h = nn::layer_norm(x, b.attn.norm.gamma, b.attn.norm.beta);
  auto windows = nn::gather_rows(h, E, plan.gather, {plan.windows, N, E});
  auto bias = nn::gather_rows(b.attn.position_bias, heads, plan.relative_index, {N, N, heads});
  auto o = attention_core(windows, b.attn, bias, b.plan->mask);
  auto back = nn::gather_rows(o, E, plan.scatter, x.shape());
  return ffn_forward(nn::add(x, back), b.ffn);
}

template <typename T>
nn::Tensor<T> temporal_project(const nn::Tensor<T>& x, const nn::Tensor<T>& weight, std::size_t years,
                               std::size_t t_out) {
  require(x.rank() == 4, "temporal downsample: expected [T, H, W, E] tokens");
  const std::size_t Tin = x.dim(0), H = x.dim(1), W = x.dim(2), E = x.dim(3);
  require(years > 0 && Tin % years == 0 && t_out % years == 0, "temporal downsample: ", Tin, " -> ", t_out,
          " timesteps is not year-aligned for ", years, " years");
  const std::size_t a = Tin / years, b = t_out / years;
  require(weight.rank() == 2 && weight.dim(0) == a * E && weight.dim(1) == b * E,
          "temporal downsample: projection must be [", a * E, ", ", b * E, "]");
  auto r = nn::permute(nn::reshape(x, {years, a, H, W, E}), {0, 2, 3, 1, 4});
  r = nn::linear(nn::reshape(r, {years * H * W, a * E}), weight);
  r = nn::permute(nn::reshape(r, {years, H, W, b, E}), {0, 3, 1, 2, 4});
  return nn::reshape(r, {t_out, H, W, E});
}

template <typename T>
nn::Tensor<T> patch_merge(const nn::Tensor<T>& x, const Norm<T>& norm, const nn::Tensor<T>& weight) {
  const std::size_t Tn = x.dim(0), H = x.dim(1), W = x.dim(2), E = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "patch merge: odd spatial extent ", H, "x", W);
  auto r = nn::permute(nn::reshape(x, {Tn, H / 2, 2, W / 2, 2, E}), {0, 1, 3, 2, 4, 5});
  r = nn::reshape(r, {Tn, H / 2, W / 2, 4 * E});
  r = nn::layer_norm(r, norm.gamma, norm.beta);
  return nn::linear(r, weight);
}

template <typename T>
nn::Tensor<T> temporal_downsample(const nn::Tensor<T>& x, const Downsample<T>& d, std::size_t years,
                                  std::size_t t_out) {
  return patch_merge(temporal_project(x, d.time_weight, years, t_out), d.norm, d.merge_weight);
}

template <typename T>
nn::Tensor<T> skip_sequences(const nn::Tensor<T>& dec, const nn::Tensor<T>& enc, std::size_t years) {
  require(dec.rank() == 4 && enc.rank() == 4, "skip connection: expected [T, H, W, E] tokens");
  require(dec.dim(0) == years && enc.dim(0) % years == 0, "skip connection: decoder must hold ", years,
          " years and encoder a multiple of it, got ", dec.dim(0), " and ", enc.dim(0));
  require(dec.dim(1) == enc.dim(1) && dec.dim(2) == enc.dim(2) && dec.dim(3) == enc.dim(3),
          "skip connection: decoder ", nn::shape_str(dec.shape()), " and encoder ", nn::shape_str(enc.shape()),
          " differ in grid or width");
  const std::size_t H = dec.dim(1), W = dec.dim(2), E = dec.dim(3);
  const std::size_t a = enc.dim(0) / years;
  const std::size_t S = years * H * W, N = 1 + a;
  // Rows of `cat`: S decoder tokens, then the a same-year encoder tokens of
  // each (year, pixel) in order.
  auto e = nn::permute(nn::reshape(enc, {years, a, H, W, E}), {0, 2, 3, 1, 4});
  auto cat = nn::concat(dec, e, {S * N, E});
  std::vector<std::int64_t> idx(S * N);
  for (std::size_t i = 0; i < S; ++i) {
    idx[i * N] = static_cast<std::int64_t>(i);
    for (std::size_t t = 0; t < a; ++t) idx[i * N + 1 + t] = static_cast<std::int64_t>(S + i * a + t);
  }
  return nn::gather_rows(cat, E, idx, {S, N, E});
}

template <typename T>
nn::Tensor<T> temporal_skip(const nn::Tensor<T>& sequences, const SkipLayer<T>& s, const nn::Shape& dec_shape) {
  const std::size_t S = sequences.dim(0), N = sequences.dim(1), E = sequences.dim(2);
  require(nn::shape_numel(dec_shape) == S * E, "skip connection: sequences do not match decoder shape");
  auto h = nn::layer_norm(sequences, s.attn.norm.gamma, s.attn.norm.beta);
  auto seq = nn::add(sequences, attention_core(h, s.attn, s.attn.position_bias, {}));
  std::vector<std::int64_t> keep(S);
  for (std::size_t i = 0; i < S; ++i) keep[i] = static_cast<std::int64_t>(i * N);
  return ffn_forward(nn::gather_rows(seq, E, keep, dec_shape), s.ffn);
}

template <typename T>
nn::Tensor<T> patch_expand(const nn::Tensor<T>& x, const nn::Tensor<T>& weight) {
  require(x.rank() == 4, "patch expand: expected [T, H, W, E] tokens");
  const std::size_t Tn = x.dim(0), H = x.dim(1), W = x.dim(2), E = x.dim(3);
  require(E % 2 == 0, "patch expand: embedding width ", E, " is odd");
  auto r = nn::linear(x, weight);
  r = nn::permute(nn::reshape(r, {Tn, H, W, 2, 2, E / 2}), {0, 1, 3, 2, 4, 5});
  return nn::reshape(r, {Tn, 2 * H, 2 * W, E / 2});
}

#define CANOPY_INSTANTIATE_LAYERS(T)                                                                           \
  template WindowedPlan<T> make_windowed_plan<T>(const Extent3&, const Extent3&, bool);                        \
  template nn::Tensor<T> ffn_forward(const nn::Tensor<T>&, const Ffn<T>&);                                     \
  template nn::Tensor<T> swin_block(const nn::Tensor<T>&, const SwinBlock<T>&);                                \
  template nn::Tensor<T> temporal_project(const nn::Tensor<T>&, const nn::Tensor<T>&, std::size_t, std::size_t); \
  template nn::Tensor<T> patch_merge(const nn::Tensor<T>&, const Norm<T>&, const nn::Tensor<T>&);              \
  template nn::Tensor<T> temporal_downsample(const nn::Tensor<T>&, const Downsample<T>&, std::size_t,          \
                                             std::size_t);                                                     \
  template nn::Tensor<T> skip_sequences(const nn::Tensor<T>&, const nn::Tensor<T>&, std::size_t);              \
  template nn::Tensor<T> temporal_skip(const nn::Tensor<T>&, const SkipLayer<T>&, const nn::Shape&);           \
  template nn::Tensor<T> patch_expand(const nn::Tensor<T>&, const nn::Tensor<T>&);

CANOPY_INSTANTIATE_LAYERS(float)
CANOPY_INSTANTIATE_LAYERS(double)

}  // namespace canopy::model
