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

#include "model/swin_unet.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "common/error.hpp"

namespace canopy::model {

using nn::Shape;

std::vector<StageShape> plan_stages(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t Y = cfg.years;
  std::vector<StageShape> s;
  s.push_back({"input", {cfg.channels, cfg.timesteps, cfg.height, cfg.width}});
  s.push_back({"patch_embed", {cfg.timesteps, cfg.height, cfg.width, cfg.embed_dim}});
  for (std::size_t l = 0; l < 4; ++l) {
    const std::string name = "encoder." + std::to_string(l);
    s.push_back({name, {cfg.enc_time(l), cfg.rows(l), cfg.cols(l), cfg.dim(l)}});
    if (l < 3)
      s.push_back({name + ".downsample", {cfg.reduce_time[l], cfg.rows(l + 1), cfg.cols(l + 1), cfg.dim(l + 1)}});
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t level = 3 - j;
    const std::string name = "decoder." + std::to_string(j);
    const Shape grid{Y, cfg.rows(level), cfg.cols(level), cfg.dim(level)};
    if (j > 0) {
      s.push_back({name + ".skip.tokens",
                   {Y * cfg.rows(level) * cfg.cols(level), 1 + cfg.enc_time(level) / Y, cfg.dim(level)}});
      s.push_back({name + ".skip", grid});
    }
    s.push_back({name, grid});
    if (j < 3) s.push_back({name + ".expand", {Y, cfg.rows(level - 1), cfg.cols(level - 1), cfg.dim(level - 1)}});
  }
  s.push_back({"output", {2, Y, cfg.height, cfg.width}});
  return s;
}

std::string describe(const ModelConfig& cfg) {
  const auto stages = plan_stages(cfg);
  std::size_t width = 0;
  for (const auto& st : stages) width = std::max(width, st.name.size());
  std::ostringstream os;
  for (const auto& st : stages) os << std::left << std::setw(static_cast<int>(width + 2)) << st.name
                                   << nn::shape_str(st.shape) << '\n';
  return os.str();
}

template <typename T>
auto TemporalSwinUnet<T>::make_param(const std::string& name, Shape shape, double stddev, bool decay) -> Tensor {
  std::vector<T> values(nn::shape_numel(shape));
  if (stddev > 0.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (auto& v : values) v = static_cast<T>(normal(rng_));
  }
  return params_.add(name, std::move(shape), std::move(values), decay);
}

template <typename T>
Linear<T> TemporalSwinUnet<T>::make_linear(const std::string& name, std::size_t in, std::size_t out, bool bias) {
  Linear<T> l;
  l.weight = make_param(name + ".weight", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)), true);
  if (bias) l.bias = make_param(name + ".bias", {out}, 0.0, false);
  return l;
}

template <typename T>
Norm<T> TemporalSwinUnet<T>::make_norm(const std::string& name, std::size_t dim) {
  Norm<T> n;
  n.gamma = params_.add(name + ".weight", {dim}, std::vector<T>(dim, T(1)), false);
  n.beta = params_.add(name + ".bias", {dim}, std::vector<T>(dim, T(0)), false);
  return n;
}

template <typename T>
Attention<T> TemporalSwinUnet<T>::make_attention(const std::string& name, std::size_t dim, std::size_t heads,
                                                 Shape bias_shape) {
  Attention<T> a;
  a.heads = heads;
  a.norm = make_norm(name + ".norm", dim);
  a.q = make_linear(name + ".q", dim, dim, true);
  a.k = make_linear(name + ".k", dim, dim, false);  // a key bias cannot change the softmax
  a.v = make_linear(name + ".v", dim, dim, true);
  a.out = make_linear(name + ".out", dim, dim, true);
  a.position_bias = make_param(name + ".position_bias", std::move(bias_shape), 0.02, false);
  return a;
}

template <typename T>
Ffn<T> TemporalSwinUnet<T>::make_ffn(const std::string& name, std::size_t dim) {
  Ffn<T> f;
  f.norm = make_norm(name + ".norm", dim);
  f.fc1 = make_linear(name + ".fc1", dim, dim * cfg_.ffn_ratio, true);
  f.fc2 = make_linear(name + ".fc2", dim * cfg_.ffn_ratio, dim, true);
  return f;
}

template <typename T>
std::vector<SwinBlock<T>> TemporalSwinUnet<T>::make_blocks(const std::string& prefix, std::size_t depth,
                                                           std::size_t level, const Extent3& extent) {
  const Extent3 window{cfg_.window_t, cfg_.window_s, cfg_.window_s};
  auto plain = std::make_shared<const WindowedPlan<T>>(make_windowed_plan<T>(extent, window, false));
  auto shifted = std::make_shared<const WindowedPlan<T>>(make_windowed_plan<T>(extent, window, true));
  std::vector<SwinBlock<T>> blocks;
  for (std::size_t i = 0; i < depth; ++i) {
    const std::string name = prefix + ".block." + std::to_string(i);
    SwinBlock<T> b;
    b.plan = (i % 2 == 1) ? shifted : plain;
    b.attn = make_attention(name + ".attn", cfg_.dim(level), cfg_.heads[level],
                            {b.plan->plan.table_size(), cfg_.heads[level]});
    b.ffn = make_ffn(name + ".ffn", cfg_.dim(level));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

template <typename T>
TemporalSwinUnet<T>::TemporalSwinUnet(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), stages_(plan_stages(cfg)), rng_(seed) {
  const std::size_t Y = cfg_.years;
  embed_ = make_linear("patch_embed", cfg_.channels, cfg_.embed_dim, true);

  for (std::size_t l = 0; l < 4; ++l) {
    const std::string name = "encoder." + std::to_string(l);
    encoder_.push_back(make_blocks(name, cfg_.depths_enc[l], l, {cfg_.enc_time(l), cfg_.rows(l), cfg_.cols(l)}));
    if (l < 3) {
      const std::size_t dim = cfg_.dim(l);
      const std::size_t in = cfg_.enc_time(l) / Y * dim;
      const std::size_t out = cfg_.reduce_time[l] / Y * dim;
      Downsample<T> d;
      d.time_weight = make_param(name + ".downsample.time.weight", {in, out}, 1.0 / std::sqrt(double(in)), true);
      d.norm = make_norm(name + ".downsample.norm", 4 * dim);
      d.merge_weight =
          make_param(name + ".downsample.merge.weight", {4 * dim, 2 * dim}, 1.0 / std::sqrt(4.0 * dim), true);
      down_.push_back(std::move(d));
    }
  }
  skip_.resize(4);
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t level = 3 - j;
    const std::size_t dim = cfg_.dim(level);
    const std::string name = "decoder." + std::to_string(j);
    if (j > 0) {
      const std::size_t n = 1 + cfg_.enc_time(level) / Y;
      skip_[j].attn = make_attention(name + ".skip.attn", dim, cfg_.heads[level], {n, n, cfg_.heads[level]});
      skip_[j].ffn = make_ffn(name + ".skip.ffn", dim);
    }
    decoder_.push_back(make_blocks(name, cfg_.depths_dec[j], level, {Y, cfg_.rows(level), cfg_.cols(level)}));
    if (j < 3)
      expand_.push_back(make_param(name + ".expand.weight", {dim, 2 * dim}, 1.0 / std::sqrt(double(dim)), true));
  }
  final_norm_ = make_norm("decoder.norm", cfg_.embed_dim);
  ref_head_ = make_linear("head.reference", cfg_.embed_dim, 1, true);

  const std::size_t E = cfg_.embed_dim;
  const double conv_std = 1.0 / std::sqrt(27.0 * E);
  const std::string ph = kPredictionHeadPrefix;
  pred_conv1_w_ = make_param(ph + "conv1.weight", {E, E, 3, 3, 3}, conv_std, true);
  pred_conv1_b_ = make_param(ph + "conv1.bias", {E}, 0.0, false);
  pred_gn1_ = make_norm(ph + "norm1", E);
  pred_conv2_w_ = make_param(ph + "conv2.weight", {E, E, 3, 3, 3}, conv_std, true);
  pred_conv2_b_ = make_param(ph + "conv2.bias", {E}, 0.0, false);
  pred_gn2_ = make_norm(ph + "norm2", E);
  pred_out_w_ = make_param(ph + "out.weight", {1, E, 1, 1, 1}, 1.0 / std::sqrt(double(E)), true);
  pred_out_b_ = make_param(ph + "out.bias", {1}, 0.0, false);
}

template <typename T>
void TemporalSwinUnet<T>::expect(const Tensor& t, const std::string& stage) const {
  for (const auto& st : stages_) {
    if (st.name != stage) continue;
    if (t.shape() != st.shape)
      fail(ErrorKind::kData, "stage ", stage, " produced ", nn::shape_str(t.shape()), ", expected ",
           nn::shape_str(st.shape));
    return;
  }
  fail(ErrorKind::kData, "unknown stage ", stage);
}

template <typename T>
auto TemporalSwinUnet<T>::patch_embed(const Tensor& x) const -> Tensor {
  require(x.defined(), "model input is undefined");
  const Shape want{cfg_.channels, cfg_.timesteps, cfg_.height, cfg_.width};
  require(x.shape() == want, "stage input: expected ", nn::shape_str(want), ", got ", nn::shape_str(x.shape()));
  auto tok = nn::linear(nn::permute(x, {1, 2, 3, 0}), embed_.weight, embed_.bias);
  expect(tok, "patch_embed");
  return tok;
}

template <typename T>
auto TemporalSwinUnet<T>::features(const Tensor& x) const -> Tensor {
  auto tok = patch_embed(x);
  std::vector<Tensor> skips(4);
  for (std::size_t l = 0; l < 4; ++l) {
    const std::string name = "encoder." + std::to_string(l);
    for (const auto& b : encoder_[l]) tok = swin_block(tok, b);
    expect(tok, name);
    skips[l] = tok;
    if (l < 3) {
      tok = temporal_downsample(tok, down_[l], cfg_.years, cfg_.reduce_time[l]);
      expect(tok, name + ".downsample");
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t level = 3 - j;
    const std::string name = "decoder." + std::to_string(j);
    if (j > 0) {
      const auto seq = skip_sequences(tok, skips[level], cfg_.years);
      expect(seq, name + ".skip.tokens");
      tok = temporal_skip(seq, skip_[j], tok.shape());
      expect(tok, name + ".skip");
    }
    for (const auto& b : decoder_[j]) tok = swin_block(tok, b);
    expect(tok, name);
    if (j < 3) {
      tok = patch_expand(tok, expand_[j]);
      expect(tok, name + ".expand");
    }
  }
  return nn::layer_norm(tok, final_norm_.gamma, final_norm_.beta);
}

template <typename T>
auto TemporalSwinUnet<T>::reference_head(const Tensor& f) const -> Tensor {
  auto r = nn::linear(f, ref_head_.weight, ref_head_.bias);
  r = nn::reshape(r, {cfg_.years, cfg_.height, cfg_.width});
  return nn::scale(r, static_cast<T>(cfg_.output_scale));
}

template <typename T>
auto TemporalSwinUnet<T>::prediction_head(const Tensor& f) const -> Tensor {
  auto h = nn::permute(f, {3, 0, 1, 2});
  h = nn::conv3d_same(h, pred_conv1_w_, pred_conv1_b_);
  h = nn::relu(nn::group_norm(h, cfg_.norm_groups, pred_gn1_.gamma, pred_gn1_.beta));
  h = nn::conv3d_same(h, pred_conv2_w_, pred_conv2_b_);
  h = nn::relu(nn::group_norm(h, cfg_.norm_groups, pred_gn2_.gamma, pred_gn2_.beta));
  h = nn::conv3d_same(h, pred_out_w_, pred_out_b_);
  h = nn::reshape(h, {cfg_.years, cfg_.height, cfg_.width});
  return nn::scale(h, static_cast<T>(cfg_.output_scale));
}

template <typename T>
auto TemporalSwinUnet<T>::Output::stacked() const -> Tensor {
  auto s = reference.shape();
  s.insert(s.begin(), 2);
  return nn::concat(reference, prediction, s);
}

template <typename T>
auto TemporalSwinUnet<T>::forward(const Tensor& x) const -> Output {
  const auto f = features(x);
  return {reference_head(f), prediction_head(f)};
}

template class TemporalSwinUnet<float>;
template class TemporalSwinUnet<double>;

}  // namespace canopy::model
