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

/**
 * @file ops.hpp
 * @brief Differentiable primitives. All ops are instantiated for float
 * (training) and double (gradient checks).
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "capsr/autograd.hpp"

namespace capsr::nn {

enum class Activation { kIdentity, kReLU, kLeakyReLU, kPReLU, kHardswish, kMish, kTanhExp };

/// Accepts the names used in configuration files ("relu", "leaky_relu",
/// "prelu", "hardswish", "mish", "tanhexp", "identity"). Throws ConfigError.
Activation parse_activation(std::string_view name);
std::string activation_name(Activation act);

// Elementwise arithmetic. Operands must share a shape, or one of them must
// be a scalar (1, 1, 1, 1), which is broadcast.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> div(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> add_scalar(const Var<T>& a, T s);
template <typename T> Var<T> mul_scalar(const Var<T>& a, T s);

template <typename T> Var<T> abs(const Var<T>& a);
template <typename T> Var<T> square(const Var<T>& a);
/// Subgradient 0 at exactly 0.
template <typename T> Var<T> sqrt(const Var<T>& a);
template <typename T> Var<T> exp(const Var<T>& a);
template <typename T> Var<T> log(const Var<T>& a);
template <typename T> Var<T> pow_scalar(const Var<T>& a, T p);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> softplus(const Var<T>& a);

template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

/// Concatenation / slicing along dim 0 (batch or kernel rows) or dim 1
/// (channels).
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, int dim);
template <typename T> Var<T> slice(const Var<T>& a, int dim, int64_t start, int64_t length);

/// Cross-correlation with zero padding. `bias` may be undefined.
/// Output spatial size is floor((h + 2p - k) / stride) + 1.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride,
              int padding);

/// w[o] = g[o] * v[o] / |v[o]|, one Euclidean norm per output channel of a
/// (out, in, k, k) direction tensor. `gain` has shape (out, 1, 1, 1).
template <typename T> Var<T> weight_norm(const Var<T>& direction, const Var<T>& gain);

template <typename T>
Var<T> activation(const Var<T>& x, Activation kind, T leaky_slope = T(0.01));
/// Parametric ReLU with a single learnable slope (scalar Var).
template <typename T> Var<T> prelu(const Var<T>& x, const Var<T>& slope);

/// (n, c*r*r, h, w) -> (n, c, r*h, r*w); channel c*r*r + dy*r + dx at (y, x)
/// lands on channel c at (r*y + dy, r*x + dx).
template <typename T> Var<T> pixel_shuffle(const Var<T>& x, int r);
/// Exact inverse of pixel_shuffle.
template <typename T> Var<T> pixel_unshuffle(const Var<T>& x, int r);

/// Capsule squashing applied to every run of `dims` consecutive channels at
/// every pixel: v = |s|^2 / (sq + |s|^2) * s / |s|.
template <typename T> Var<T> squash(const Var<T>& x, int64_t dims, T sq);

/// Same 1-D taps applied along rows then columns of every channel, no
/// padding ("valid"): output is (h - K + 1, w - K + 1).
template <typename T> Var<T> separable_filter(const Var<T>& x, const std::vector<T>& taps);

/// 2x2 mean pooling with stride 2; odd trailing rows/columns are dropped.
template <typename T> Var<T> avg_pool2(const Var<T>& x);

template <typename T> Var<T> replicate_pad(const Var<T>& x, int p);

}  // namespace capsr::nn
