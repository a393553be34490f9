// Copyright (c) 2026 The capsr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared helpers for unit and acceptance tests: random tensors, a central
// finite-difference gradient checker and naive reference implementations.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "capsr/layers.hpp"

namespace capsr::testing {

using TensorD = Tensor4<double>;
using VarD = Var<double>;

inline TensorD random_tensor(Shape4 s, Rng& rng, double lo = -1, double hi = 1) {
  TensorD t(s);
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

/// Like random_tensor, but every value keeps |v| >= margin so that kinked
/// activations are never probed near their kink.
inline TensorD random_away_from_zero(Shape4 s, Rng& rng, double margin = 1e-2) {
  TensorD t(s);
  for (auto& v : t.data()) {
    const double m = uniform(rng, margin, 1.0);
    v = uniform01(rng) < 0.5 ? -m : m;
  }
  return t;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheckResult {
  double max_rel_err = 0;
  int64_t checked = 0;
};

/// Compares backward() gradients of `loss_fn` against central differences
/// with step `h` on up to `max_coords` randomly chosen coordinates of every
/// leaf in `leaves`. The loss is rebuilt from scratch for each probe.
inline GradCheckResult grad_check(const std::vector<VarD>& leaves,
                                  const std::function<VarD()>& loss_fn, Rng& rng,
                                  int64_t max_coords = 40, double h = 1e-5,
                                  double floor = 1e-6) {
  for (auto leaf : leaves) leaf.zero_grad();
  backward(loss_fn());
  GradCheckResult res;
  for (auto leaf : leaves) {
    const int64_t n = leaf.value().numel();
    std::vector<int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (n > max_coords) {
      for (int64_t i = 0; i < max_coords; ++i) {
        const auto j = i + static_cast<int64_t>(uniform01(rng) * static_cast<double>(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
      }
      idx.resize(static_cast<std::size_t>(max_coords));
    }
    const TensorD analytic = leaf.has_grad() ? leaf.grad() : TensorD(leaf.shape());
    for (int64_t i : idx) {
      double& x = leaf.mutable_value()[i];
      const double saved = x;
      x = saved + h;
      const double up = loss_fn().item();
      x = saved - h;
      const double down = loss_fn().item();
      x = saved;
      const double numeric = (up - down) / (2 * h);
      res.max_rel_err = std::max(res.max_rel_err, rel_err(analytic[i], numeric, floor));
      ++res.checked;
    }
  }
  return res;
}

/// Direct nested-loop convolution.
inline TensorD naive_conv2d(const TensorD& x, const TensorD& w, const TensorD* bias, int stride,
                            int pad) {
  const Shape4 xs = x.shape();
  const Shape4 ws = w.shape();
  const int64_t oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  TensorD out({xs.n, ws.n, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t o = 0; o < ws.n; ++o)
      for (int64_t y = 0; y < oh; ++y)
        for (int64_t xo = 0; xo < ow; ++xo) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (int64_t c = 0; c < xs.c; ++c)
            for (int64_t ky = 0; ky < ws.h; ++ky)
              for (int64_t kx = 0; kx < ws.w; ++kx) {
                const int64_t iy = y * stride - pad + ky;
                const int64_t ix = xo * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += x(n, c, iy, ix) * w(o, c, ky, kx);
              }
          out(n, o, y, xo) = acc;
        }
  return out;
}

/// Reindexing reference for pixel shuffle.
inline TensorD naive_pixel_shuffle(const TensorD& x, int r) {
  const Shape4 s = x.shape();
  const int64_t oc = s.c / (r * r);
  TensorD out({s.n, oc, s.h * r, s.w * r});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < oc; ++c)
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t xx = 0; xx < s.w; ++xx)
          for (int dy = 0; dy < r; ++dy)
            for (int dx = 0; dx < r; ++dx)
              out(n, c, r * y + dy, r * xx + dx) = x(n, c * r * r + dy * r + dx, y, xx);
  return out;
}

/// Copies the elements out so they can be compared with ==.
template <typename T>
std::vector<T> values(const Tensor4<T>& t) {
  return {t.data().begin(), t.data().end()};
}

inline double max_abs_diff(const TensorD& a, const TensorD& b) {
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_rel_diff(const TensorD& a, const TensorD& b, double floor = 1e-12) {
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, rel_err(a[i], b[i], floor));
  return m;
}

struct SsimOracle {
  double ssim = 0;  // mean of l * cs
  double cs = 0;    // mean of cs
};

struct SsimMapOracle {
  TensorD ssim;  // (n, c, h - window + 1, w - window + 1)
  TensorD cs;
};

/// Per-window SSIM evaluated directly: for every valid position, weighted
/// means, variances and covariance over the 2-D Gaussian window.
inline SsimMapOracle ssim_map_oracle(const TensorD& a, const TensorD& b, double data_range,
                                     int window = 11, double sigma = 1.5) {
  std::vector<double> g(static_cast<std::size_t>(window));
  double gs = 0;
  for (int i = 0; i < window; ++i) {
    const double d = i - (window - 1) / 2.0;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    gs += g[i];
  }
  for (auto& v : g) v /= gs;
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const Shape4 s = a.shape();
  const Shape4 ms{s.n, s.c, s.h - window + 1, s.w - window + 1};
  SsimMapOracle out{TensorD(ms), TensorD(ms)};
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < ms.h; ++y)
        for (int64_t x = 0; x < ms.w; ++x) {
          double ma = 0, mb = 0;
          for (int i = 0; i < window; ++i)
            for (int j = 0; j < window; ++j) {
              ma += g[i] * g[j] * a(n, c, y + i, x + j);
              mb += g[i] * g[j] * b(n, c, y + i, x + j);
            }
          double va = 0, vb = 0, cov = 0;
          for (int i = 0; i < window; ++i)
            for (int j = 0; j < window; ++j) {
              const double da = a(n, c, y + i, x + j) - ma;
              const double db = b(n, c, y + i, x + j) - mb;
              va += g[i] * g[j] * da * da;
              vb += g[i] * g[j] * db * db;
              cov += g[i] * g[j] * da * db;
            }
          const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
          const double cs = (2 * cov + c2) / (va + vb + c2);
          out.ssim(n, c, y, x) = l * cs;
          out.cs(n, c, y, x) = cs;
        }
  return out;
}

inline SsimOracle ssim_window_oracle(const TensorD& a, const TensorD& b, double data_range,
                                     int window = 11, double sigma = 1.5) {
  const SsimMapOracle m = ssim_map_oracle(a, b, data_range, window, sigma);
  SsimOracle out;
  for (int64_t i = 0; i < m.ssim.numel(); ++i) {
    out.ssim += m.ssim[i];
    out.cs += m.cs[i];
  }
  out.ssim /= static_cast<double>(m.ssim.numel());
  out.cs /= static_cast<double>(m.cs.numel());
  return out;
}

inline TensorD halve(const TensorD& t) {
  const Shape4 s = t.shape();
  TensorD out({s.n, s.c, s.h / 2, s.w / 2});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < s.h / 2; ++y)
        for (int64_t x = 0; x < s.w / 2; ++x)
          out(n, c, y, x) = 0.25 * (t(n, c, 2 * y, 2 * x) + t(n, c, 2 * y, 2 * x + 1) +
                                    t(n, c, 2 * y + 1, 2 * x) + t(n, c, 2 * y + 1, 2 * x + 1));
  return out;
}

/// Multi-scale SSIM from the window oracle with the standard exponents
/// truncated to `scales` and renormalized.
inline double ms_ssim_oracle(TensorD a, TensorD b, int scales, double data_range) {
  const double standard[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double total = 0;
  for (int j = 0; j < scales; ++j) total += standard[j];
  double out = 1;
  for (int j = 0; j < scales; ++j) {
    const SsimOracle o = ssim_window_oracle(a, b, data_range);
    const double beta = standard[j] / total;
    out *= std::pow(j + 1 == scales ? o.ssim : o.cs, beta);
    a = halve(a);
    b = halve(b);
  }
  return out;
}

/// Direct Barron rho from its defining cases.
inline double barron_oracle(double x, double alpha, double c) {
  const double z = (x / c) * (x / c);
  if (alpha == 2) return 0.5 * z;
  if (alpha == 0) return std::log(0.5 * z + 1);
  if (std::isinf(alpha)) return 1 - std::exp(-0.5 * z);
  const double b = std::abs(alpha - 2);
  return b / alpha * (std::pow(z / b + 1, alpha / 2) - 1);
}

}  // namespace capsr::testing
