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

// conv2d lowers to im2col + GEMM. The GEMM runs through Eigen, single
// threaded, so results are bitwise reproducible run to run.

#include <Eigen/Core>
#include <cmath>

#include "capsr/ops.hpp"

namespace capsr::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeom {
  int64_t in_c, h, w, k, stride, pad, oh, ow;
  [[nodiscard]] int64_t rows() const { return in_c * k * k; }
  [[nodiscard]] int64_t cols() const { return oh * ow; }
  [[nodiscard]] bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

// Column matrix (in_c*k*k, oh*ow) for one image.
template <typename T>
void im2col(const T* img, const ConvGeom& g, T* col) {
  for (int64_t c = 0; c < g.in_c; ++c) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill_n(dst, g.ow, T(0));
            continue;
          }
          const T* src = img + (c * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, T* img) {
  for (int64_t c = 0; c < g.in_c; ++c) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + oy * g.ow;
          T* dst = img + (c * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride,
              int padding) {
  const Shape4 xs = input.shape();
  const Shape4 ws = weight.shape();
  if (ws.h != ws.w) throw ConfigError("conv2d: non-square kernel " + ws.str());
  if (xs.c != ws.c) {
    throw ConfigError("conv2d: input has " + std::to_string(xs.c) +
                      " channels but kernel expects " + std::to_string(ws.c) + " (input " +
                      xs.str() + ", kernel " + ws.str() + ")");
  }
  if (stride < 1 || padding < 0) throw ConfigError("conv2d: stride must be >= 1, padding >= 0");
  const bool has_bias = bias.defined();
  if (has_bias && bias.value().numel() != ws.n) {
    throw ConfigError("conv2d: bias has " + std::to_string(bias.value().numel()) +
                      " entries for " + std::to_string(ws.n) + " output channels");
  }
  for (const T v : weight.value().data()) {
    if (!std::isfinite(v)) throw NumericError("conv2d: non-finite kernel value");
  }
  const int64_t oh = (xs.h + 2 * padding - ws.h) / stride + 1;
  const int64_t ow = (xs.w + 2 * padding - ws.w) / stride + 1;
  if (xs.h + 2 * padding < ws.h || xs.w + 2 * padding < ws.w) {
    throw ConfigError("conv2d: input " + xs.str() + " too small for kernel " + ws.str() +
                      " with padding " + std::to_string(padding));
  }
  const ConvGeom g{xs.c, xs.h, xs.w, ws.h, stride, padding, oh, ow};
  const int64_t out_c = ws.n;

  Tensor4<T> out({xs.n, out_c, oh, ow});
  ConstMapMat<T> wmat(weight.value().ptr(), out_c, g.rows());
  std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows() * g.cols()));
  for (int64_t n = 0; n < xs.n; ++n) {
    const T* img = input.value().ptr() + n * xs.c * xs.h * xs.w;
    const T* cptr = img;
    if (!g.pointwise()) {
      im2col(img, g, col.data());
      cptr = col.data();
    }
    ConstMapMat<T> cmat(cptr, g.rows(), g.cols());
    MapMat<T> omat(out.ptr() + n * out_c * g.cols(), out_c, g.cols());
    omat.noalias() = wmat * cmat;
    if (has_bias) {
      for (int64_t o = 0; o < out_c; ++o) omat.row(o).array() += bias.value()[o];
    }
  }

  std::vector<Var<T>> inputs{input, weight};
  if (has_bias) inputs.push_back(bias);
  return Var<T>::op(std::move(out), std::move(inputs), [g, out_c, has_bias](Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& wn = *self.inputs[1];
    Node<T>* bn = has_bias ? self.inputs[2].get() : nullptr;
    const int64_t batch = xn.value.shape().n;
    const int64_t img_size = g.in_c * g.h * g.w;
    ConstMapMat<T> wmat(wn.value.ptr(), out_c, g.rows());
    std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows() * g.cols()));
    std::vector<T> gcol(static_cast<std::size_t>(g.rows() * g.cols()));
    for (int64_t n = 0; n < batch; ++n) {
      ConstMapMat<T> gout(self.grad.ptr() + n * out_c * g.cols(), out_c, g.cols());
      if (wn.requires_grad) {
        const T* img = xn.value.ptr() + n * img_size;
        const T* cptr = img;
        if (!g.pointwise()) {
          im2col(img, g, col.data());
          cptr = col.data();
        }
        ConstMapMat<T> cmat(cptr, g.rows(), g.cols());
        MapMat<T> gw(wn.grad_buffer().ptr(), out_c, g.rows());
        gw.noalias() += gout * cmat.transpose();
      }
      if (bn && bn->requires_grad) {
        auto& gb = bn->grad_buffer();
        for (int64_t o = 0; o < out_c; ++o) gb[o] += gout.row(o).sum();
      }
      if (xn.requires_grad) {
        T* gimg = xn.grad_buffer().ptr() + n * img_size;
        if (g.pointwise()) {
          MapMat<T> gx(gimg, g.rows(), g.cols());
          gx.noalias() += wmat.transpose() * gout;
        } else {
          MapMat<T> gc(gcol.data(), g.rows(), g.cols());
          gc.noalias() = wmat.transpose() * gout;
          col2im_add(gcol.data(), g, gimg);
        }
      }
    }
  });
}

template <typename T>
Var<T> weight_norm(const Var<T>& direction, const Var<T>& gain) {
  const Shape4 vs = direction.shape();
  if (gain.value().numel() != vs.n) {
    throw ConfigError("weight_norm: gain has " + std::to_string(gain.value().numel()) +
                      " entries for " + std::to_string(vs.n) + " output channels");
  }
  const int64_t row = vs.c * vs.h * vs.w;
  std::vector<T> norms(static_cast<std::size_t>(vs.n));
  Tensor4<T> out(vs);
  for (int64_t o = 0; o < vs.n; ++o) {
    const T* v = direction.value().ptr() + o * row;
    T n2 = 0;
    for (int64_t i = 0; i < row; ++i) n2 += v[i] * v[i];
    const T norm = std::sqrt(n2);
    if (!(norm > 0) || !std::isfinite(norm)) {
      throw NumericError("weight_norm: degenerate direction (norm " + std::to_string(norm) +
                         ") for output channel " + std::to_string(o));
    }
    norms[o] = norm;
    const T scale = gain.value()[o] / norm;
    T* w = out.ptr() + o * row;
    for (int64_t i = 0; i < row; ++i) w[i] = v[i] * scale;
  }
  return Var<T>::op(std::move(out), {direction, gain},
                    [row, norms = std::move(norms)](Node<T>& self) {
                      auto& vn = *self.inputs[0];
                      auto& gn = *self.inputs[1];
                      const int64_t outs = vn.value.shape().n;
                      for (int64_t o = 0; o < outs; ++o) {
                        const T* v = vn.value.ptr() + o * row;
                        const T* gw = self.grad.ptr() + o * row;
                        const T norm = norms[o];
                        // u = v/|v|; dL/dg = u.gw; dL/dv = g/|v| (gw - u (u.gw))
                        T ug = 0;
                        for (int64_t i = 0; i < row; ++i) ug += v[i] * gw[i];
                        ug /= norm;
                        if (gn.requires_grad) gn.grad_buffer()[o] += ug;
                        if (vn.requires_grad) {
                          const T g = gn.value[o];
                          T* gv = vn.grad_buffer().ptr() + o * row;
                          for (int64_t i = 0; i < row; ++i) {
                            gv[i] += g / norm * (gw[i] - v[i] / norm * ug);
                          }
                        }
                      }
                    });
}

template Var<float> conv2d(const Var<float>&, const Var<float>&, const Var<float>&, int, int);
template Var<double> conv2d(const Var<double>&, const Var<double>&, const Var<double>&, int,
                            int);
template Var<float> weight_norm(const Var<float>&, const Var<float>&);
template Var<double> weight_norm(const Var<double>&, const Var<double>&);

}  // namespace capsr::nn
