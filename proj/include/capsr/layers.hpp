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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "capsr/ops.hpp"

namespace capsr {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from raw engine bits, so sequences are
/// identical across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
};

template <typename T>
using ParameterList = std::vector<Parameter<T>>;

/// Convolution with weight normalization: the effective kernel of output
/// channel o is gain[o] * direction[o] / |direction[o]|.
///
/// Initialization draws the direction uniformly in +-sqrt(1/(in*k*k)) and
/// sets the gain to the direction norm, so the effective kernel equals the
/// drawn direction at step 0. Biases start at zero.
template <typename T>
class WnConv2d {
 public:
  WnConv2d() = default;
  WnConv2d(int64_t in_channels, int64_t out_channels, int kernel, int stride, int padding,
           Rng& rng);

  [[nodiscard]] Var<T> effective_weight() const { return nn::weight_norm(direction, gain); }
  [[nodiscard]] Var<T> forward(const Var<T>& x) const {
    return nn::conv2d(x, effective_weight(), bias, stride, padding);
  }
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  [[nodiscard]] int64_t in_channels() const { return direction.shape().c; }
  [[nodiscard]] int64_t out_channels() const { return direction.shape().n; }
  [[nodiscard]] int kernel() const { return static_cast<int>(direction.shape().h); }

  Var<T> direction;  // (out, in, k, k)
  Var<T> gain;       // (out, 1, 1, 1)
  Var<T> bias;       // (out, 1, 1, 1)
  int stride = 1;
  int padding = 0;
};

/// One activation application point. PReLU sites own a learnable slope.
template <typename T>
class ActivationSite {
 public:
  ActivationSite() = default;
  explicit ActivationSite(nn::Activation kind);

  [[nodiscard]] Var<T> operator()(const Var<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  [[nodiscard]] nn::Activation kind() const { return kind_; }

 private:
  nn::Activation kind_ = nn::Activation::kIdentity;
  Var<T> slope_;
};

/// Number of scalar values across a parameter list.
template <typename T>
int64_t count_parameters(const ParameterList<T>& params) {
  int64_t total = 0;
  for (const auto& p : params) total += p.var.value().numel();
  return total;
}

}  // namespace capsr
