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

// Independent capsule-layer reference: explicit loops over type pairs.

#pragma once

#include <cmath>

#include "capsr/capsules.hpp"
#include "test_support.hpp"

namespace capsr::testing {

// Loop over output types j and input types i, convolve, sum with 1/M,
// then squash every pixel's vector.
inline TensorD routing_sum_oracle(const ConvCapsuleLayer<double>& layer, const TensorD& x) {
  const auto& s = layer.shape();
  const Shape4 xs = x.shape();
  TensorD out;
  for (int64_t j = 0; j < s.out_types; ++j) {
    TensorD sj;
    for (int64_t i = 0; i < s.in_types; ++i) {
      TensorD xi({xs.n, s.in_dims, xs.h, xs.w});
      for (int64_t n = 0; n < xs.n; ++n)
        for (int64_t d = 0; d < s.in_dims; ++d)
          for (int64_t y = 0; y < xs.h; ++y)
            for (int64_t xx = 0; xx < xs.w; ++xx) xi(n, d, y, xx) = x(n, i * s.in_dims + d, y, xx);
      const TensorD vote =
          naive_conv2d(xi, layer.vote_kernel(i, j), nullptr, s.stride, s.padding);
      if (sj.empty()) sj = TensorD(vote.shape());
      for (int64_t e = 0; e < vote.numel(); ++e) sj[e] += vote[e] / static_cast<double>(s.out_types);
    }
    if (out.empty()) out = TensorD({xs.n, s.out_types * s.out_dims, sj.shape().h, sj.shape().w});
    const Shape4 ss = sj.shape();
    for (int64_t n = 0; n < ss.n; ++n)
      for (int64_t y = 0; y < ss.h; ++y)
        for (int64_t xx = 0; xx < ss.w; ++xx) {
          double n2 = 0;
          for (int64_t d = 0; d < s.out_dims; ++d) {
            sj(n, d, y, xx) += layer.votes().bias.value()[j * s.out_dims + d];
            n2 += sj(n, d, y, xx) * sj(n, d, y, xx);
          }
          const double norm = std::sqrt(n2);
          const double f = norm > 0 ? n2 / (s.sq + n2) / norm : 0.0;
          for (int64_t d = 0; d < s.out_dims; ++d) {
            out(n, j * s.out_dims + d, y, xx) = sj(n, d, y, xx) * f;
          }
        }
  }
  return out;
}

}  // namespace capsr::testing
