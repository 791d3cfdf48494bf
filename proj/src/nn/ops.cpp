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

#include "nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace canopy::nn {

namespace {

std::atomic<FaultInjection> g_fault{FaultInjection::kNone};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.defined() && b.defined(), op, ": undefined operand");
  require(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

template <typename T>
void accumulate(Tensor<T> t, std::span<const T> g) {
  T* dst = t.grad_accumulator();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace

void set_fault_injection(FaultInjection fault) { g_fault.store(fault); }
FaultInjection fault_injection() { return g_fault.load(); }

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto r = make_result<T>(a.shape(), std::move(out), {&a, &b});
  if (r.requires_grad()) {
    r.set_backward([a, b](std::span<const T> g) {
      if (a.requires_grad()) accumulate(a, g);
      if (b.requires_grad()) accumulate(b, g);
    });
  }
  return r;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto r = make_result<T>(a.shape(), std::move(out), {&a, &b});
  if (r.requires_grad()) {
    r.set_backward([a, b](std::span<const T> g) mutable {
      if (a.requires_grad()) accumulate(a, g);
      if (b.requires_grad()) {
        T* d = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto r = make_result<T>(a.shape(), std::move(out), {&a, &b});
  if (r.requires_grad()) {
    r.set_backward([a, b](std::span<const T> g) mutable {
      if (a.requires_grad()) {
        T* d = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        T* d = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * a.data()[i];
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  auto r = make_result<T>(a.shape(), std::move(out), {&a});
  if (r.requires_grad()) {
    r.set_backward([a, factor](std::span<const T> g) mutable {
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
    });
  }
  return r;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
  auto r = make_result<T>(a.shape(), std::move(out), {&a});
  if (r.requires_grad()) {
    r.set_backward([a](std::span<const T> g) mutable {
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.data()[i] > T(0)) d[i] += g[i];
    });
  }
  return r;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  // Scalar erf on purpose: vectorised versions take a different path for
  // unaligned leading elements, which makes results address-dependent.
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  auto cdf = std::make_shared<std::vector<T>>(a.numel());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a.data()[i];
    (*cdf)[i] = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
    out[i] = x * (*cdf)[i];
  }
  auto r = make_result<T>(a.shape(), std::move(out), {&a});
  if (r.requires_grad()) {
    r.set_backward([a, cdf](std::span<const T> g) {
      const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T x = a.data()[i];
        d[i] += g[i] * ((*cdf)[i] + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x));
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T v : a.values()) acc += v;
  auto r = make_result<T>(Shape{}, {acc}, {&a});
  if (r.requires_grad()) {
    r.set_backward([a](std::span<const T> g) mutable {
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < a.numel(); ++i) d[i] += g[0];
    });
  }
  return r;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  require(a.numel() > 0, "mean of empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  require(shape_numel(shape) == a.numel(), "reshape: ", shape_str(a.shape()), " -> ", shape_str(shape),
          " changes the element count");
  std::vector<T> out(a.values().begin(), a.values().end());
  auto r = make_result<T>(std::move(shape), std::move(out), {&a});
  if (r.requires_grad()) r.set_backward([a](std::span<const T> g) { accumulate(a, g); });
  return r;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
  const std::size_t rank = a.rank();
  require(axes.size() == rank, "permute: expected ", rank, " axes");
  std::vector<bool> used(rank, false);
  for (auto ax : axes) {
    require(ax < rank && !used[ax], "permute: invalid axis list");
    used[ax] = true;
  }
  Shape out_shape(rank);
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * a.dim(i);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = a.dim(axes[i]);

  const std::size_t n = a.numel();
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (*src)[i] = offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      offset += in_stride[axes[d]];
      if (counter[d] < out_shape[d]) break;
      offset -= in_stride[axes[d]] * out_shape[d];
      counter[d] = 0;
    }
  }
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[(*src)[i]];
  auto r = make_result<T>(std::move(out_shape), std::move(out), {&a});
  if (r.requires_grad()) {
    r.set_backward([a, src](std::span<const T> g) mutable {
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) d[(*src)[i]] += g[i];
    });
  }
  return r;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, std::size_t row_width, const std::vector<std::int64_t>& index,
                      Shape out_shape) {
  require(row_width > 0 && a.numel() % row_width == 0, "gather_rows: row width ", row_width,
          " does not divide ", a.numel());
  require(shape_numel(out_shape) == index.size() * row_width, "gather_rows: output shape ",
          shape_str(out_shape), " does not hold ", index.size(), " rows of ", row_width);
  const auto rows = static_cast<std::int64_t>(a.numel() / row_width);
  for (auto i : index) require(i < rows, "gather_rows: index ", i, " out of range ", rows);

  std::vector<T> out(index.size() * row_width, T(0));
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) continue;
    std::copy_n(a.data() + static_cast<std::size_t>(index[i]) * row_width, row_width, out.data() + i * row_width);
  }
  auto r = make_result<T>(std::move(out_shape), std::move(out), {&a});
  if (r.requires_grad()) {
    auto idx = std::make_shared<std::vector<std::int64_t>>(index);
    r.set_backward([a, idx, row_width](std::span<const T> g) mutable {
      T* d = a.grad_accumulator();
      for (std::size_t i = 0; i < idx->size(); ++i) {
        if ((*idx)[i] < 0) continue;
        T* dst = d + static_cast<std::size_t>((*idx)[i]) * row_width;
        const T* src = g.data() + i * row_width;
        for (std::size_t j = 0; j < row_width; ++j) dst[j] += src[j];
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, Shape out_shape) {
  require(shape_numel(out_shape) == a.numel() + b.numel(), "concat: output shape ", shape_str(out_shape),
          " does not hold ", a.numel() + b.numel(), " values");
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  auto r = make_result<T>(std::move(out_shape), std::move(out), {&a, &b});
  if (r.requires_grad()) {
    r.set_backward([a, b](std::span<const T> g) mutable {
      if (a.requires_grad()) accumulate(a, g.subspan(0, a.numel()));
      if (b.requires_grad()) accumulate(b, g.subspan(a.numel()));
    });
  }
  return r;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.defined() && weight.defined() && weight.rank() == 2, "linear: weight must be [K, M]");
  require(x.rank() >= 1, "linear: input must have at least one axis");
  const std::size_t K = weight.dim(0);
  const std::size_t M = weight.dim(1);
  require(x.shape().back() == K, "linear: input inner extent ", x.shape().back(), " does not match weight ",
          shape_str(weight.shape()));
  if (bias.defined()) require(bias.numel() == M, "linear: bias must have ", M, " entries");
  const std::size_t R = x.numel() / K;

  Shape out_shape = x.shape();
  out_shape.back() = M;
  std::vector<T> out(R * M);
  MapMat<T> Y(out.data(), R, M);
  Y.noalias() = ConstMapMat<T>(x.data(), R, K) * ConstMapMat<T>(weight.data(), K, M);
  if (bias.defined()) Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), M);

  auto r = make_result<T>(std::move(out_shape), std::move(out), {&x, &weight, &bias});
  if (r.requires_grad()) {
    r.set_backward([x, weight, bias, R, K, M](std::span<const T> g) mutable {
      ConstMapMat<T> dY(g.data(), R, M);
      if (x.requires_grad())
        MapMat<T>(x.grad_accumulator(), R, K).noalias() += dY * ConstMapMat<T>(weight.data(), K, M).transpose();
      if (weight.requires_grad())
        MapMat<T>(weight.grad_accumulator(), K, M).noalias() += ConstMapMat<T>(x.data(), R, K).transpose() * dY;
      if (bias.defined() && bias.requires_grad()) {
        T* db = bias.grad_accumulator();
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t m = 0; m < M; ++m) db[m] += g[r * M + m];
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  require(eps > T(0), "layer_norm: eps must be positive");
  const std::size_t D = x.shape().back();
  require(gamma.numel() == D && beta.numel() == D, "layer_norm: affine parameters must have ", D, " entries");
  const std::size_t R = x.numel() / D;

  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(R);
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < R; ++r) {
    const T* row = x.data() + r * D;
    T mu = T(0);
    for (std::size_t j = 0; j < D; ++j) mu += row[j];
    mu /= static_cast<T>(D);
    T var = T(0);
    for (std::size_t j = 0; j < D; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(D);
    const T inv = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < D; ++j) {
      const T h = (row[j] - mu) * inv;
      (*xhat)[r * D + j] = h;
      out[r * D + j] = h * gamma.data()[j] + beta.data()[j];
    }
  }
  auto res = make_result<T>(x.shape(), std::move(out), {&x, &gamma, &beta});
  if (res.requires_grad()) {
    res.set_backward([x, gamma, beta, xhat, inv_std, R, D](std::span<const T> g) mutable {
      const bool faulty = fault_injection() == FaultInjection::kLayerNormBackward;
      T* dx = x.requires_grad() ? x.grad_accumulator() : nullptr;
      T* dg = gamma.requires_grad() ? gamma.grad_accumulator() : nullptr;
      T* db = beta.requires_grad() ? beta.grad_accumulator() : nullptr;
      for (std::size_t r = 0; r < R; ++r) {
        const T* gr = g.data() + r * D;
        const T* hr = xhat->data() + r * D;
        if (dg)
          for (std::size_t j = 0; j < D; ++j) dg[j] += gr[j] * hr[j];
        if (db)
          for (std::size_t j = 0; j < D; ++j) db[j] += gr[j];
        if (!dx) continue;
        T m1 = T(0), m2 = T(0);
        for (std::size_t j = 0; j < D; ++j) {
          const T dh = gr[j] * gamma.data()[j];
          m1 += dh;
          m2 += dh * hr[j];
        }
        m1 /= static_cast<T>(D);
        m2 /= static_cast<T>(D);
        if (faulty) m2 = T(0);
        const T inv = (*inv_std)[r];
        for (std::size_t j = 0; j < D; ++j) dx[r * D + j] += inv * (gr[j] * gamma.data()[j] - m1 - hr[j] * m2);
      }
    });
  }
  return res;
}

template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps) {
  require(eps > T(0), "group_norm: eps must be positive");
  require(x.rank() >= 2, "group_norm: input must be channel-first with trailing extents");
  const std::size_t C = x.dim(0);
  require(groups > 0 && C % groups == 0, "group_norm: ", C, " channels are not divisible into ", groups,
          " groups");
  require(gamma.numel() == C && beta.numel() == C, "group_norm: affine parameters must have ", C, " entries");
  const std::size_t S = x.numel() / C;
  const std::size_t per_group = C / groups;
  const std::size_t m = per_group * S;

  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(groups);
  std::vector<T> out(x.numel());
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const T* block = x.data() + gi * m;
    T mu = T(0);
    for (std::size_t i = 0; i < m; ++i) mu += block[i];
    mu /= static_cast<T>(m);
    T var = T(0);
    for (std::size_t i = 0; i < m; ++i) var += (block[i] - mu) * (block[i] - mu);
    var /= static_cast<T>(m);
    const T inv = T(1) / std::sqrt(var + eps);
    (*inv_std)[gi] = inv;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t c = gi * per_group + i / S;
      const T h = (block[i] - mu) * inv;
      (*xhat)[gi * m + i] = h;
      out[gi * m + i] = h * gamma.data()[c] + beta.data()[c];
    }
  }
  auto res = make_result<T>(x.shape(), std::move(out), {&x, &gamma, &beta});
  if (res.requires_grad()) {
    res.set_backward([x, gamma, beta, xhat, inv_std, groups, per_group, S, m](std::span<const T> g) mutable {
      T* dx = x.requires_grad() ? x.grad_accumulator() : nullptr;
      T* dg = gamma.requires_grad() ? gamma.grad_accumulator() : nullptr;
      T* db = beta.requires_grad() ? beta.grad_accumulator() : nullptr;
      for (std::size_t gi = 0; gi < groups; ++gi) {
        T m1 = T(0), m2 = T(0);
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t idx = gi * m + i;
          const std::size_t c = gi * per_group + i / S;
          const T dh = g[idx] * gamma.data()[c];
          m1 += dh;
          m2 += dh * (*xhat)[idx];
          if (dg) dg[c] += g[idx] * (*xhat)[idx];
          if (db) db[c] += g[idx];
        }
        if (!dx) continue;
        m1 /= static_cast<T>(m);
        m2 /= static_cast<T>(m);
        const T inv = (*inv_std)[gi];
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t idx = gi * m + i;
          const std::size_t c = gi * per_group + i / S;
          dx[idx] += inv * (g[idx] * gamma.data()[c] - m1 - (*xhat)[idx] * m2);
        }
      }
    });
  }
  return res;
}

namespace {

struct ConvGeometry {
  std::size_t ci, co, t, h, w, kt, kh, kw;
};

// Calls fn(out_offset, in_offset, length, kernel_offset) for every contiguous
// W-run that a kernel tap touches inside the zero-padded volume.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, Fn&& fn) {
  const auto pt = static_cast<std::ptrdiff_t>(g.kt / 2);
  const auto ph = static_cast<std::ptrdiff_t>(g.kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  const auto T = static_cast<std::ptrdiff_t>(g.t);
  const auto H = static_cast<std::ptrdiff_t>(g.h);
  const auto W = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t o = 0; o < g.co; ++o)
    for (std::size_t i = 0; i < g.ci; ++i)
      for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(g.kt); ++a)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(g.kh); ++b)
          for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(g.kw); ++c) {
            const std::size_t koff = (((o * g.ci + i) * g.kt + a) * g.kh + b) * g.kw + c;
            const std::ptrdiff_t dt = a - pt, dh = b - ph, dw = c - pw;
            const std::ptrdiff_t w0 = std::max<std::ptrdiff_t>(0, -dw), w1 = std::min(W, W - dw);
            if (w1 <= w0) continue;
            for (std::ptrdiff_t t = std::max<std::ptrdiff_t>(0, -dt); t < std::min(T, T - dt); ++t)
              for (std::ptrdiff_t hh = std::max<std::ptrdiff_t>(0, -dh); hh < std::min(H, H - dh); ++hh) {
                const auto out_off = static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(o) * T + t) * H + hh) * W + w0);
                const auto in_off = static_cast<std::size_t>(
                    ((static_cast<std::ptrdiff_t>(i) * T + t + dt) * H + hh + dh) * W + w0 + dw);
                fn(out_off, in_off, static_cast<std::size_t>(w1 - w0), koff);
              }
          }
}

}  // namespace

template <typename T>
Tensor<T> conv3d_same(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require(x.defined() && x.rank() == 4, "conv3d_same: input must be [C_in, T, H, W]");
  require(kernel.defined() && kernel.rank() == 5, "conv3d_same: kernel must be [C_out, C_in, kT, kH, kW]");
  require(kernel.dim(1) == x.dim(0), "conv3d_same: kernel expects ", kernel.dim(1), " input channels, got ",
          x.dim(0));
  for (std::size_t d = 2; d < 5; ++d)
    require(kernel.dim(d) % 2 == 1, "conv3d_same: kernel extents must be odd, got ", shape_str(kernel.shape()));
  const ConvGeometry geo{x.dim(0), kernel.dim(0), x.dim(1), x.dim(2), x.dim(3),
                         kernel.dim(2), kernel.dim(3), kernel.dim(4)};
  if (bias.defined()) require(bias.numel() == geo.co, "conv3d_same: bias must have ", geo.co, " entries");

  const std::size_t vol = geo.t * geo.h * geo.w;
  std::vector<T> out(geo.co * vol, T(0));
  if (bias.defined())
    for (std::size_t o = 0; o < geo.co; ++o) std::fill_n(out.data() + o * vol, vol, bias.data()[o]);
  const T* xin = x.data();
  const T* kd = kernel.data();
  for_each_tap(geo, [&](std::size_t oo, std::size_t io, std::size_t len, std::size_t ko) {
    const T wv = kd[ko];
    T* dst = out.data() + oo;
    const T* src = xin + io;
    for (std::size_t j = 0; j < len; ++j) dst[j] += wv * src[j];
  });

  auto r = make_result<T>(Shape{geo.co, geo.t, geo.h, geo.w}, std::move(out), {&x, &kernel, &bias});
  if (r.requires_grad()) {
    r.set_backward([x, kernel, bias, geo, vol](std::span<const T> g) mutable {
      T* dx = x.requires_grad() ? x.grad_accumulator() : nullptr;
      T* dk = kernel.requires_grad() ? kernel.grad_accumulator() : nullptr;
      const T* xin = x.data();
      const T* kd = kernel.data();
      for_each_tap(geo, [&](std::size_t oo, std::size_t io, std::size_t len, std::size_t ko) {
        const T* go = g.data() + oo;
        if (dx) {
          const T wv = kd[ko];
          T* dst = dx + io;
          for (std::size_t j = 0; j < len; ++j) dst[j] += wv * go[j];
        }
        if (dk) {
          const T* src = xin + io;
          T acc = T(0);
          for (std::size_t j = 0; j < len; ++j) acc += go[j] * src[j];
          dk[ko] += acc;
        }
      });
      if (bias.defined() && bias.requires_grad()) {
        T* db = bias.grad_accumulator();
        for (std::size_t o = 0; o < geo.co; ++o) {
          T acc = T(0);
          for (std::size_t i = 0; i < vol; ++i) acc += g[o * vol + i];
          db[o] += acc;
        }
      }
    });
  }
  return r;
}

template <typename T>
Tensor<T> windowed_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t heads,
                             const Tensor<T>& bias, const AttentionMask<T>& mask) {
  require(q.defined() && k.defined() && v.defined(), "attention: undefined operand");
  require(q.rank() == 3 && k.rank() == 3 && v.rank() == 3, "attention: q, k, v must be [groups, tokens, dim]");
  const std::size_t G = q.dim(0), N = q.dim(1), E = q.dim(2);
  const std::size_t M = k.dim(1);
  require(k.dim(0) == G && v.dim(0) == G, "attention: group counts differ");
  require(k.dim(2) == E && v.dim(2) == E, "attention: head-dim mismatch between q ", shape_str(q.shape()),
          ", k ", shape_str(k.shape()), ", v ", shape_str(v.shape()));
  require(v.dim(1) == M, "attention: k and v token counts differ");
  require(heads > 0 && E % heads == 0, "attention: ", E, " channels do not split into ", heads, " heads");
  if (bias.defined()) require(bias.numel() == N * M * heads, "attention: bias must be [N, M, heads]");
  if (mask.values) {
    require(mask.groups > 0 && mask.values->size() == mask.groups * N * M, "attention: mask must be [groups, N, M]");
    if (mask.group_of) {
      require(mask.group_of->size() == G, "attention: mask group map must have one entry per group");
      for (auto m : *mask.group_of) require(m < mask.groups, "attention: mask group map out of range");
    }
  }
  const std::size_t d = E / heads;
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(d));

  auto probs = std::make_shared<std::vector<T>>(G * heads * N * M);
  std::vector<T> out(G * N * E);
  RowMat<T> scores(N, M);
  for (std::size_t g = 0; g < G; ++g) {
    const T* mask_g = nullptr;
    if (mask.values) mask_g = mask.values->data() + (mask.group_of ? (*mask.group_of)[g] : g % mask.groups) * N * M;
    for (std::size_t h = 0; h < heads; ++h) {
      ConstStridedMap<T> Q(q.data() + g * N * E + h * d, N, d, Eigen::OuterStride<>(E));
      ConstStridedMap<T> K(k.data() + g * M * E + h * d, M, d, Eigen::OuterStride<>(E));
      ConstStridedMap<T> V(v.data() + g * M * E + h * d, M, d, Eigen::OuterStride<>(E));
      scores.noalias() = (Q * K.transpose()) * scale_factor;
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
          T s = scores(i, j);
          if (bias.defined()) s += bias.data()[(i * M + j) * heads + h];
          if (mask_g) s += mask_g[i * M + j];
          scores(i, j) = s;
        }
        T mx = scores(i, 0);
        for (std::size_t j = 1; j < M; ++j) mx = std::max(mx, scores(i, j));
        // `scores` is Eigen-allocated, so the vectorised exp sees the same
        // alignment on every run.
        scores.row(i) = (scores.row(i).array() - mx).exp();
        T total = T(0);
        for (std::size_t j = 0; j < M; ++j) total += scores(i, j);
        const T inv = T(1) / total;
        for (std::size_t j = 0; j < M; ++j) scores(i, j) *= inv;
      }
      MapMat<T>(probs->data() + (g * heads + h) * N * M, N, M) = scores;
      StridedMap<T>(out.data() + g * N * E + h * d, N, d, Eigen::OuterStride<>(E)).noalias() = scores * V;
    }
  }

  auto r = make_result<T>(Shape{G, N, E}, std::move(out), {&q, &k, &v, &bias});
  if (r.requires_grad()) {
    r.set_backward([q, k, v, bias, probs, G, N, M, E, d, heads, scale_factor](std::span<const T> grad) mutable {
      T* dq = q.requires_grad() ? q.grad_accumulator() : nullptr;
      T* dk = k.requires_grad() ? k.grad_accumulator() : nullptr;
      T* dv = v.requires_grad() ? v.grad_accumulator() : nullptr;
      T* dbias = (bias.defined() && bias.requires_grad()) ? bias.grad_accumulator() : nullptr;
      RowMat<T> dP(N, M);
      for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t h = 0; h < heads; ++h) {
          ConstMapMat<T> P(probs->data() + (g * heads + h) * N * M, N, M);
          ConstStridedMap<T> dO(grad.data() + g * N * E + h * d, N, d, Eigen::OuterStride<>(E));
          ConstStridedMap<T> Q(q.data() + g * N * E + h * d, N, d, Eigen::OuterStride<>(E));
          ConstStridedMap<T> K(k.data() + g * M * E + h * d, M, d, Eigen::OuterStride<>(E));
          ConstStridedMap<T> V(v.data() + g * M * E + h * d, M, d, Eigen::OuterStride<>(E));
          if (dv)
            StridedMap<T>(dv + g * M * E + h * d, M, d, Eigen::OuterStride<>(E)).noalias() += P.transpose() * dO;
          dP.noalias() = dO * V.transpose();
          // Softmax Jacobian: dS = P .* (dP - rowsum(dP .* P)).
          for (std::size_t i = 0; i < N; ++i) {
            T dot = T(0);
            for (std::size_t j = 0; j < M; ++j) dot += dP(i, j) * P(i, j);
            for (std::size_t j = 0; j < M; ++j) dP(i, j) = P(i, j) * (dP(i, j) - dot);
          }
          if (dbias)
            for (std::size_t i = 0; i < N; ++i)
              for (std::size_t j = 0; j < M; ++j) dbias[(i * M + j) * heads + h] += dP(i, j);
          if (dq)
            StridedMap<T>(dq + g * N * E + h * d, N, d, Eigen::OuterStride<>(E)).noalias() += (dP * K) * scale_factor;
          if (dk)
            StridedMap<T>(dk + g * M * E + h * d, M, d, Eigen::OuterStride<>(E)).noalias() +=
                (dP.transpose() * Q) * scale_factor;
        }
      }
    });
  }
  return r;
}

#define CANOPY_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                                         \
  template Tensor<T> relu(const Tensor<T>&);                                                             \
  template Tensor<T> gelu(const Tensor<T>&);                                                             \
  template Tensor<T> sum(const Tensor<T>&);                                                              \
  template Tensor<T> mean(const Tensor<T>&);                                                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                   \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                         \
  template Tensor<T> gather_rows(const Tensor<T>&, std::size_t, const std::vector<std::int64_t>&, Shape); \
  template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&, Shape);                                  \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                \
  template Tensor<T> group_norm(const Tensor<T>&, std::size_t, const Tensor<T>&, const Tensor<T>&, T);   \
  template Tensor<T> conv3d_same(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> windowed_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                                        const Tensor<T>&, const AttentionMask<T>&);

CANOPY_INSTANTIATE_OPS(float)
CANOPY_INSTANTIATE_OPS(double)

}  // namespace canopy::nn
