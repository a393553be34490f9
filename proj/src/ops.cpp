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

#include <cmath>
#include <numeric>

#include "capsr/ops.hpp"

namespace capsr::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kReLU;
  if (name == "leaky_relu" || name == "leakyrelu") return Activation::kLeakyReLU;
  if (name == "prelu") return Activation::kPReLU;
  if (name == "hardswish") return Activation::kHardswish;
  if (name == "mish") return Activation::kMish;
  if (name == "tanhexp") return Activation::kTanhExp;
  if (name == "identity" || name == "none") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kReLU: return "relu";
    case Activation::kLeakyReLU: return "leaky_relu";
    case Activation::kPReLU: return "prelu";
    case Activation::kHardswish: return "hardswish";
    case Activation::kMish: return "mish";
    case Activation::kTanhExp: return "tanhexp";
  }
  return "unknown";
}

namespace {

template <typename T>
void check_binary(const Var<T>& a, const Var<T>& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa == sb || sa.is_scalar() || sb.is_scalar()) return;
  throw UsageError(std::string(op) + ": incompatible shapes " + sa.str() + " and " + sb.str());
}

template <typename T>
Shape4 broadcast_shape(const Var<T>& a, const Var<T>& b) {
  return a.shape().is_scalar() ? b.shape() : a.shape();
}

// Gradient of a broadcast operand: either elementwise or reduced to a scalar.
template <typename T>
void accumulate_broadcast(Node<T>& target, const Tensor4<T>& full) {
  auto& g = target.grad_buffer();
  if (g.shape() == full.shape()) {
    for (int64_t i = 0; i < full.numel(); ++i) g[i] += full[i];
  } else {
    T s = 0;
    for (int64_t i = 0; i < full.numel(); ++i) s += full[i];
    g[0] += s;
  }
}

// Elementwise binary op: f(a, b), with df/da and df/db.
template <typename T, typename F, typename DA, typename DB>
Var<T> binary(const Var<T>& a, const Var<T>& b, const char* name, F f, DA da, DB db) {
  check_binary(a, b, name);
  const Shape4 shape = broadcast_shape(a, b);
  const bool a_s = a.shape().is_scalar() && !(shape.is_scalar());
  const bool b_s = b.shape().is_scalar() && !(shape.is_scalar());
  Tensor4<T> out(shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (int64_t i = 0; i < shape.numel(); ++i) {
    out[i] = f(av[a_s ? 0 : i], bv[b_s ? 0 : i]);
  }
  return Var<T>::op(std::move(out), {a, b}, [a_s, b_s, da, db](Node<T>& self) {
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    const int64_t n = self.value.numel();
    if (an.requires_grad) {
      Tensor4<T> ga(self.value.shape());
      for (int64_t i = 0; i < n; ++i) {
        ga[i] = self.grad[i] * da(an.value[a_s ? 0 : i], bn.value[b_s ? 0 : i], self.value[i]);
      }
      accumulate_broadcast(an, ga);
    }
    if (bn.requires_grad) {
      Tensor4<T> gb(self.value.shape());
      for (int64_t i = 0; i < n; ++i) {
        gb[i] = self.grad[i] * db(an.value[a_s ? 0 : i], bn.value[b_s ? 0 : i], self.value[i]);
      }
      accumulate_broadcast(bn, gb);
    }
  });
}

// Elementwise unary op with derivative expressed from (x, y).
template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& a, F f, D d) {
  Tensor4<T> out(a.shape());
  const auto& av = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = f(av[i]);
  return Var<T>::op(std::move(out), {a}, [d](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    for (int64_t i = 0; i < self.value.numel(); ++i) {
      g[i] += self.grad[i] * d(in.value[i], self.value[i]);
    }
  });
}

template <typename T>
T softplus_value(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid_value(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(1); });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(-1); });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y, T) { return y; },
      [](T x, T, T) { return x; });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      a, b, "div", [](T x, T y) { return x / y; }, [](T, T y, T) { return T(1) / y; },
      [](T, T y, T out) { return -out / y; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return unary<T>(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  return unary<T>(a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Var<T> abs(const Var<T>& a) {
  return unary<T>(
      a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > 0 ? T(1) : (x < 0 ? T(-1) : T(0)); });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary<T>(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  return unary<T>(
      a, [](T x) { return std::sqrt(x); },
      [](T, T y) { return y > 0 ? T(0.5) / y : T(0); });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return unary<T>(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  return unary<T>(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Var<T> pow_scalar(const Var<T>& a, T p) {
  return unary<T>(
      a, [p](T x) { return std::pow(x, p); },
      [p](T x, T) { return x == 0 ? T(0) : p * std::pow(x, p - T(1)); });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary<T>(a, [](T x) { return sigmoid_value(x); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> softplus(const Var<T>& a) {
  return unary<T>(a, [](T x) { return softplus_value(x); }, [](T x, T) { return sigmoid_value(x); });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  const auto& v = a.value();
  T s = 0;
  for (int64_t i = 0; i < v.numel(); ++i) s += v[i];
  return Var<T>::op(Tensor4<T>::scalar(s), {a}, [](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    const T go = self.grad[0];
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  return mul_scalar(sum(a), T(1) / static_cast<T>(a.value().numel()));
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int dim) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  if (dim != 0 && dim != 1) throw UsageError("concat supports dim 0 or 1");
  Shape4 out_shape = parts[0].shape();
  int64_t total = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    const bool ok = dim == 0 ? (s.c == out_shape.c && s.h == out_shape.h && s.w == out_shape.w)
                             : (s.n == out_shape.n && s.h == out_shape.h && s.w == out_shape.w);
    if (!ok) throw UsageError("concat: mismatched shapes " + s.str() + " and " + out_shape.str());
    total += dim == 0 ? s.n : s.c;
  }
  (dim == 0 ? out_shape.n : out_shape.c) = total;
  Tensor4<T> out(out_shape);
  // Both layouts reduce to copying contiguous blocks of `outer` rows.
  const int64_t outer = dim == 0 ? 1 : out_shape.n;
  const int64_t out_row = out_shape.numel() / outer;
  int64_t cursor = 0;
  for (const auto& p : parts) {
    const int64_t in_row = p.value().numel() / outer;
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(p.value().ptr() + o * in_row, in_row, out.ptr() + o * out_row + cursor);
    }
    cursor += in_row;
  }
  return Var<T>::op(std::move(out), parts, [outer, out_row](Node<T>& self) {
    int64_t cur = 0;
    for (auto& in : self.inputs) {
      const int64_t in_row = in->value.numel() / outer;
      if (in->requires_grad) {
        auto& g = in->grad_buffer();
        for (int64_t o = 0; o < outer; ++o) {
          const T* src = self.grad.ptr() + o * out_row + cur;
          T* dst = g.ptr() + o * in_row;
          for (int64_t i = 0; i < in_row; ++i) dst[i] += src[i];
        }
      }
      cur += in_row;
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, int dim, int64_t start, int64_t length) {
  if (dim != 0 && dim != 1) throw UsageError("slice supports dim 0 or 1");
  const Shape4 in_shape = a.shape();
  const int64_t extent = dim == 0 ? in_shape.n : in_shape.c;
  if (start < 0 || length <= 0 || start + length > extent) {
    throw UsageError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range for " + in_shape.str());
  }
  Shape4 out_shape = in_shape;
  (dim == 0 ? out_shape.n : out_shape.c) = length;
  const int64_t outer = dim == 0 ? 1 : in_shape.n;
  const int64_t in_row = in_shape.numel() / outer;
  const int64_t out_row = out_shape.numel() / outer;
  const int64_t inner = in_row / extent;
  const int64_t begin = start * inner;
  Tensor4<T> out(out_shape);
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.value().ptr() + o * in_row + begin, out_row, out.ptr() + o * out_row);
  }
  return Var<T>::op(std::move(out), {a}, [outer, in_row, out_row, begin](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (int64_t o = 0; o < outer; ++o) {
      const T* src = self.grad.ptr() + o * out_row;
      T* dst = g.ptr() + o * in_row + begin;
      for (int64_t i = 0; i < out_row; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> activation(const Var<T>& x, Activation kind, T leaky_slope) {
  switch (kind) {
    case Activation::kIdentity:
      return x;
    case Activation::kReLU:
      return unary<T>(
          x, [](T v) { return v > 0 ? v : T(0); }, [](T v, T) { return v > 0 ? T(1) : T(0); });
    case Activation::kLeakyReLU:
      return unary<T>(
          x, [leaky_slope](T v) { return v > 0 ? v : leaky_slope * v; },
          [leaky_slope](T v, T) { return v > 0 ? T(1) : leaky_slope; });
    case Activation::kHardswish:
      return unary<T>(
          x,
          [](T v) {
            if (v <= T(-3)) return T(0);
            if (v >= T(3)) return v;
            return v * (v + T(3)) / T(6);
          },
          [](T v, T) {
            if (v < T(-3)) return T(0);
            if (v > T(3)) return T(1);
            return (T(2) * v + T(3)) / T(6);
          });
    case Activation::kMish:
      return unary<T>(
          x, [](T v) { return v * std::tanh(softplus_value(v)); },
          [](T v, T) {
            const T t = std::tanh(softplus_value(v));
            return t + v * (T(1) - t * t) * sigmoid_value(v);
          });
    case Activation::kTanhExp:
      return unary<T>(
          x, [](T v) { return v > T(20) ? v : v * std::tanh(std::exp(v)); },
          [](T v, T) {
            if (v > T(20)) return T(1);
            const T e = std::exp(v);
            const T t = std::tanh(e);
            return t + v * e * (T(1) - t * t);
          });
    case Activation::kPReLU:
      throw ConfigError("prelu needs a learnable slope; use nn::prelu");
  }
  throw ConfigError("unknown activation");
}

template <typename T>
Var<T> prelu(const Var<T>& x, const Var<T>& slope) {
  if (!slope.shape().is_scalar()) throw UsageError("prelu slope must be a scalar");
  const T a = slope.item();
  Tensor4<T> out(x.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const T v = x.value()[i];
    out[i] = v > 0 ? v : a * v;
  }
  return Var<T>::op(std::move(out), {x, slope}, [](Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& an = *self.inputs[1];
    const T a = an.value[0];
    T ga = 0;
    Tensor4<T>* gx = xn.requires_grad ? &xn.grad_buffer() : nullptr;
    for (int64_t i = 0; i < self.value.numel(); ++i) {
      const T v = xn.value[i];
      const T g = self.grad[i];
      if (v > 0) {
        if (gx) (*gx)[i] += g;
      } else {
        if (gx) (*gx)[i] += a * g;
        ga += v * g;
      }
    }
    if (an.requires_grad) an.grad_buffer()[0] += ga;
  });
}

template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, int r) {
  const Shape4 s = x.shape();
  if (r < 1) throw ConfigError("pixel_shuffle factor must be >= 1");
  if (s.c % (static_cast<int64_t>(r) * r) != 0) {
    throw ConfigError("pixel_shuffle: channels " + std::to_string(s.c) +
                      " not divisible by r^2 = " + std::to_string(r * r));
  }
  if (r == 1) return x;
  const int64_t oc = s.c / (r * r);
  const Shape4 os{s.n, oc, s.h * r, s.w * r};
  // index map out -> in, shared by forward and backward
  auto in_index = [s, r](int64_t n, int64_t c, int64_t oy, int64_t ox) {
    const int64_t y = oy / r, dy = oy % r, xx = ox / r, dx = ox % r;
    const int64_t ic = c * r * r + dy * r + dx;
    return static_cast<std::size_t>(((n * s.c + ic) * s.h + y) * s.w + xx);
  };
  Tensor4<T> out(os);
  std::size_t o = 0;
  for (int64_t n = 0; n < os.n; ++n)
    for (int64_t c = 0; c < os.c; ++c)
      for (int64_t y = 0; y < os.h; ++y)
        for (int64_t xx = 0; xx < os.w; ++xx) out[o++] = x.value()[in_index(n, c, y, xx)];
  return Var<T>::op(std::move(out), {x}, [os, in_index](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    std::size_t o = 0;
    for (int64_t n = 0; n < os.n; ++n)
      for (int64_t c = 0; c < os.c; ++c)
        for (int64_t y = 0; y < os.h; ++y)
          for (int64_t xx = 0; xx < os.w; ++xx) g[in_index(n, c, y, xx)] += self.grad[o++];
  });
}

template <typename T>
Var<T> pixel_unshuffle(const Var<T>& x, int r) {
  const Shape4 s = x.shape();
  if (r < 1 || s.h % r != 0 || s.w % r != 0) {
    throw ConfigError("pixel_unshuffle: spatial dims " + s.str() + " not divisible by " +
                      std::to_string(r));
  }
  if (r == 1) return x;
  const Shape4 os{s.n, s.c * r * r, s.h / r, s.w / r};
  auto in_index = [s, r](int64_t n, int64_t oc, int64_t y, int64_t xx) {
    const int64_t c = oc / (r * r), rem = oc % (r * r), dy = rem / r, dx = rem % r;
    return static_cast<std::size_t>(((n * s.c + c) * s.h + y * r + dy) * s.w + xx * r + dx);
  };
  Tensor4<T> out(os);
  std::size_t o = 0;
  for (int64_t n = 0; n < os.n; ++n)
    for (int64_t c = 0; c < os.c; ++c)
      for (int64_t y = 0; y < os.h; ++y)
        for (int64_t xx = 0; xx < os.w; ++xx) out[o++] = x.value()[in_index(n, c, y, xx)];
  return Var<T>::op(std::move(out), {x}, [os, in_index](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    std::size_t o = 0;
    for (int64_t n = 0; n < os.n; ++n)
      for (int64_t c = 0; c < os.c; ++c)
        for (int64_t y = 0; y < os.h; ++y)
          for (int64_t xx = 0; xx < os.w; ++xx) g[in_index(n, c, y, xx)] += self.grad[o++];
  });
}

template <typename T>
Var<T> squash(const Var<T>& x, int64_t dims, T sq) {
  const Shape4 s = x.shape();
  if (dims < 1 || s.c % dims != 0) {
    throw ConfigError("squash: channel count " + std::to_string(s.c) +
                      " is not a multiple of capsule dims " + std::to_string(dims));
  }
  if (!(sq > 0)) throw ConfigError("squash constant must be > 0");
  const int64_t caps = s.c / dims;
  const int64_t plane = s.plane();
  Tensor4<T> out(s);
  // Per-vector |s|^2 is kept for the backward pass.
  std::vector<T> norm2(static_cast<std::size_t>(s.n * caps * plane));
  const T* in = x.value().ptr();
  T* o = out.ptr();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t k = 0; k < caps; ++k) {
      const int64_t base = (n * s.c + k * dims) * plane;
      T* n2 = norm2.data() + (n * caps + k) * plane;
      for (int64_t p = 0; p < plane; ++p) n2[p] = 0;
      for (int64_t d = 0; d < dims; ++d) {
        const T* row = in + base + d * plane;
        for (int64_t p = 0; p < plane; ++p) n2[p] += row[p] * row[p];
      }
      for (int64_t d = 0; d < dims; ++d) {
        const T* row = in + base + d * plane;
        T* orow = o + base + d * plane;
        for (int64_t p = 0; p < plane; ++p) {
          orow[p] = row[p] * std::sqrt(n2[p]) / (sq + n2[p]);
        }
      }
    }
  }
  return Var<T>::op(std::move(out), {x}, [s, dims, caps, plane, sq, norm2 = std::move(norm2)](
                                             Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& g = xn.grad_buffer();
    const T* in = xn.value.ptr();
    const T* go = self.grad.ptr();
    std::vector<T> dot(static_cast<std::size_t>(plane));
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t k = 0; k < caps; ++k) {
        const int64_t base = (n * s.c + k * dims) * plane;
        const T* n2 = norm2.data() + (n * caps + k) * plane;
        std::fill(dot.begin(), dot.end(), T(0));
        for (int64_t d = 0; d < dims; ++d) {
          const T* row = in + base + d * plane;
          const T* grow = go + base + d * plane;
          for (int64_t p = 0; p < plane; ++p) dot[p] += row[p] * grow[p];
        }
        for (int64_t d = 0; d < dims; ++d) {
          const T* row = in + base + d * plane;
          const T* grow = go + base + d * plane;
          T* gi = g.ptr() + base + d * plane;
          for (int64_t p = 0; p < plane; ++p) {
            const T r = std::sqrt(n2[p]);
            if (r == 0) continue;  // v ~ s*|s|/sq near 0, so the Jacobian vanishes
            const T denom = sq + n2[p];
            const T f = r / denom;
            const T df = (sq - n2[p]) / (r * denom * denom);
            gi[p] += f * grow[p] + row[p] * df * dot[p];
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> separable_filter(const Var<T>& x, const std::vector<T>& taps) {
  const Shape4 s = x.shape();
  const auto k = static_cast<int64_t>(taps.size());
  if (k < 1 || s.h < k || s.w < k) {
    throw UsageError("separable_filter: image " + s.str() + " smaller than window " +
                     std::to_string(k));
  }
  const int64_t oh = s.h - k + 1, ow = s.w - k + 1;
  const int64_t planes = s.n * s.c;
  // Horizontal pass result (planes, h, ow) is needed again in backward only
  // through the taps, so it is not stored.
  Tensor4<T> out({s.n, s.c, oh, ow});
  std::vector<T> tmp(static_cast<std::size_t>(s.h * ow));
  for (int64_t p = 0; p < planes; ++p) {
    const T* in = x.value().ptr() + p * s.h * s.w;
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t xx = 0; xx < ow; ++xx) {
        T acc = 0;
        for (int64_t t = 0; t < k; ++t) acc += taps[t] * in[y * s.w + xx + t];
        tmp[y * ow + xx] = acc;
      }
    }
    T* o = out.ptr() + p * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t xx = 0; xx < ow; ++xx) {
        T acc = 0;
        for (int64_t t = 0; t < k; ++t) acc += taps[t] * tmp[(y + t) * ow + xx];
        o[y * ow + xx] = acc;
      }
    }
  }
  return Var<T>::op(std::move(out), {x}, [s, k, oh, ow, planes, taps](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    std::vector<T> gtmp(static_cast<std::size_t>(s.h * ow));
    for (int64_t p = 0; p < planes; ++p) {
      const T* go = self.grad.ptr() + p * oh * ow;
      std::fill(gtmp.begin(), gtmp.end(), T(0));
      for (int64_t y = 0; y < oh; ++y)
        for (int64_t t = 0; t < k; ++t)
          for (int64_t xx = 0; xx < ow; ++xx) gtmp[(y + t) * ow + xx] += taps[t] * go[y * ow + xx];
      T* gi = g.ptr() + p * s.h * s.w;
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t xx = 0; xx < ow; ++xx)
          for (int64_t t = 0; t < k; ++t) gi[y * s.w + xx + t] += taps[t] * gtmp[y * ow + xx];
    }
  });
}

template <typename T>
Var<T> avg_pool2(const Var<T>& x) {
  const Shape4 s = x.shape();
  if (s.h < 2 || s.w < 2) throw UsageError("avg_pool2 needs at least 2x2 input, got " + s.str());
  const Shape4 os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor4<T> out(os);
  const int64_t planes = s.n * s.c;
  for (int64_t p = 0; p < planes; ++p) {
    const T* in = x.value().ptr() + p * s.h * s.w;
    T* o = out.ptr() + p * os.h * os.w;
    for (int64_t y = 0; y < os.h; ++y)
      for (int64_t xx = 0; xx < os.w; ++xx) {
        const T* a = in + 2 * y * s.w + 2 * xx;
        o[y * os.w + xx] = T(0.25) * (a[0] + a[1] + a[s.w] + a[s.w + 1]);
      }
  }
  return Var<T>::op(std::move(out), {x}, [s, os, planes](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (int64_t p = 0; p < planes; ++p) {
      const T* go = self.grad.ptr() + p * os.h * os.w;
      T* gi = g.ptr() + p * s.h * s.w;
      for (int64_t y = 0; y < os.h; ++y)
        for (int64_t xx = 0; xx < os.w; ++xx) {
          const T v = T(0.25) * go[y * os.w + xx];
          T* a = gi + 2 * y * s.w + 2 * xx;
          a[0] += v;
          a[1] += v;
          a[s.w] += v;
          a[s.w + 1] += v;
        }
    }
  });
}

template <typename T>
Var<T> replicate_pad(const Var<T>& x, int p) {
  if (p < 0) throw UsageError("negative padding");
  if (p == 0) return x;
  const Shape4 s = x.shape();
  const Shape4 os{s.n, s.c, s.h + 2 * p, s.w + 2 * p};
  auto src = [s, p](int64_t y, int64_t xx) {
    const int64_t sy = std::clamp<int64_t>(y - p, 0, s.h - 1);
    const int64_t sx = std::clamp<int64_t>(xx - p, 0, s.w - 1);
    return sy * s.w + sx;
  };
  Tensor4<T> out(os);
  const int64_t planes = s.n * s.c;
  for (int64_t q = 0; q < planes; ++q) {
    const T* in = x.value().ptr() + q * s.h * s.w;
    T* o = out.ptr() + q * os.h * os.w;
    for (int64_t y = 0; y < os.h; ++y)
      for (int64_t xx = 0; xx < os.w; ++xx) o[y * os.w + xx] = in[src(y, xx)];
  }
  return Var<T>::op(std::move(out), {x}, [s, os, planes, src](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (int64_t q = 0; q < planes; ++q) {
      const T* go = self.grad.ptr() + q * os.h * os.w;
      T* gi = g.ptr() + q * s.h * s.w;
      for (int64_t y = 0; y < os.h; ++y)
        for (int64_t xx = 0; xx < os.w; ++xx) gi[src(y, xx)] += go[y * os.w + xx];
    }
  });
}

#define CAPSR_INSTANTIATE(T)                                                           \
  template Var<T> add(const Var<T>&, const Var<T>&);                                   \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                   \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                   \
  template Var<T> div(const Var<T>&, const Var<T>&);                                   \
  template Var<T> add_scalar(const Var<T>&, T);                                        \
  template Var<T> mul_scalar(const Var<T>&, T);                                        \
  template Var<T> abs(const Var<T>&);                                                  \
  template Var<T> square(const Var<T>&);                                               \
  template Var<T> sqrt(const Var<T>&);                                                 \
  template Var<T> exp(const Var<T>&);                                                  \
  template Var<T> log(const Var<T>&);                                                  \
  template Var<T> pow_scalar(const Var<T>&, T);                                        \
  template Var<T> sigmoid(const Var<T>&);                                              \
  template Var<T> softplus(const Var<T>&);                                             \
  template Var<T> sum(const Var<T>&);                                                  \
  template Var<T> mean(const Var<T>&);                                                 \
  template Var<T> concat(const std::vector<Var<T>>&, int);                             \
  template Var<T> slice(const Var<T>&, int, int64_t, int64_t);                         \
  template Var<T> activation(const Var<T>&, Activation, T);                            \
  template Var<T> prelu(const Var<T>&, const Var<T>&);                                 \
  template Var<T> pixel_shuffle(const Var<T>&, int);                                   \
  template Var<T> pixel_unshuffle(const Var<T>&, int);                                 \
  template Var<T> squash(const Var<T>&, int64_t, T);                                   \
  template Var<T> separable_filter(const Var<T>&, const std::vector<T>&);              \
  template Var<T> avg_pool2(const Var<T>&);                                            \
  template Var<T> replicate_pad(const Var<T>&, int);

CAPSR_INSTANTIATE(float)
CAPSR_INSTANTIATE(double)
#undef CAPSR_INSTANTIATE

}  // namespace capsr::nn
