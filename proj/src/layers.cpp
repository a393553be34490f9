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

#include "capsr/layers.hpp"

#include <cmath>

namespace capsr {

template <typename T>
WnConv2d<T>::WnConv2d(int64_t in_channels, int64_t out_channels, int kernel, int stride_,
                      int padding_, Rng& rng)
    : stride(stride_), padding(padding_) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) {
    throw ConfigError("conv layer needs positive channel counts and kernel size");
  }
  const Shape4 ws{out_channels, in_channels, kernel, kernel};
  const double bound = std::sqrt(1.0 / static_cast<double>(in_channels * kernel * kernel));
  Tensor4<T> v(ws);
  for (auto& x : v.data()) x = static_cast<T>(uniform(rng, -bound, bound));
  Tensor4<T> g({out_channels, 1, 1, 1});
  const int64_t row = in_channels * kernel * kernel;
  for (int64_t o = 0; o < out_channels; ++o) {
    double n2 = 0;
    for (int64_t i = 0; i < row; ++i) n2 += static_cast<double>(v[o * row + i]) * v[o * row + i];
    g[o] = static_cast<T>(std::sqrt(n2));
  }
  direction = Var<T>::leaf(std::move(v));
  gain = Var<T>::leaf(std::move(g));
  bias = Var<T>::leaf(Tensor4<T>({out_channels, 1, 1, 1}));
}

template <typename T>
void WnConv2d<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  out.push_back({prefix + ".direction", direction});
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
ActivationSite<T>::ActivationSite(nn::Activation kind) : kind_(kind) {
  if (kind_ == nn::Activation::kPReLU) slope_ = Var<T>::leaf(Tensor4<T>::scalar(T(0.25)));
}

template <typename T>
Var<T> ActivationSite<T>::operator()(const Var<T>& x) const {
  if (kind_ == nn::Activation::kPReLU) return nn::prelu(x, slope_);
  return nn::activation(x, kind_);
}

template <typename T>
void ActivationSite<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  if (slope_.defined()) out.push_back({prefix + ".slope", slope_});
}

template class WnConv2d<float>;
template class WnConv2d<double>;
template class ActivationSite<float>;
template class ActivationSite<double>;

}  // namespace capsr
