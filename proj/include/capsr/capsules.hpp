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
 * @file capsules.hpp
 * @brief Convolutional capsules without routing, and the residual dense
 * capsule block built from them.
 *
 * A capsule tensor is a plain NCHW tensor whose channels are grouped into
 * `types` consecutive runs of `dims` channels; each run at a pixel is one
 * pose vector.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capsr/layers.hpp"

namespace capsr {

template <typename T>
struct CapsuleState {
  Var<T> poses;  // (n, types * dims, h, w)
  int64_t types = 1;
  int64_t dims = 1;

  CapsuleState() = default;
  CapsuleState(Var<T> p, int64_t types_, int64_t dims_);
};

/// How vote kernels are tied across input capsule types.
enum class VoteSharing {
  kPerPair,        // one kernel per (input type, output type)
  kPerOutputType,  // one kernel per output type, reused for every input type
};

/// How a block's feature map is viewed as capsules.
enum class CapsuleLayout {
  kAtoms,      // c capsule types of F dims each; votes shared per output type
  kPartition,  // the F channels split into c types of F/c dims; per-pair votes
};

CapsuleLayout parse_capsule_layout(const std::string& name);
std::string capsule_layout_name(CapsuleLayout layout);

struct CapsLayerShape {
  int64_t in_types = 1;
  int64_t in_dims = 1;
  int64_t out_types = 1;  // M, the coupling coefficient is 1/M
  int64_t out_dims = 1;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  VoteSharing sharing = VoteSharing::kPerPair;
  double sq = 1.0;
  bool use_squash = true;
};

/// Convolutional capsule layer with constant coupling 1/M.
///
/// For output type j: s_j = b_j + (1/M) * sum_i conv(x_i, W_ij), then
/// v_j = squash(s_j, sq) per pixel over its out_dims vector. Every W_ij is
/// weight-normalized per output channel.
template <typename T>
class ConvCapsuleLayer {
 public:
  ConvCapsuleLayer() = default;
  ConvCapsuleLayer(const CapsLayerShape& shape, Rng& rng);

  [[nodiscard]] CapsuleState<T> forward(const CapsuleState<T>& input) const;

  /// Votes of every (i, j) pair folded into one (M*out_dims, in_types*in_dims,
  /// k, k) kernel, coupling coefficient included.
  [[nodiscard]] Var<T> routed_kernel() const;
  /// Kernel W_ij (out_dims, in_dims, k, k) after weight normalization,
  /// without the coupling coefficient.
  [[nodiscard]] Tensor4<T> vote_kernel(int64_t i, int64_t j) const;
  [[nodiscard]] T coupling() const { return T(1) / static_cast<T>(shape_.out_types); }
  [[nodiscard]] const CapsLayerShape& shape() const { return shape_; }

  void collect(const std::string& prefix, ParameterList<T>& out) const { votes_.collect(prefix, out); }
  /// Weight-normalized vote convolution; its direction rows are laid out as
  /// (j, o) for kPerOutputType and (i, j, o) for kPerPair.
  [[nodiscard]] WnConv2d<T>& votes() { return votes_; }
  [[nodiscard]] const WnConv2d<T>& votes() const { return votes_; }

 private:
  CapsLayerShape shape_;
  WnConv2d<T> votes_;
};

struct RdcbShape {
  int64_t filters = 128;    // F
  int64_t capsules = 4;     // c
  int64_t layers = 3;       // L
  int kernel = 3;
  double res_scale = 0.25;
  double sq = 1.0;
  nn::Activation act = nn::Activation::kReLU;
  CapsuleLayout layout = CapsuleLayout::kAtoms;
  bool use_squash = true;
  bool use_act = true;
};

/// Residual dense capsule block:
///   x_0 = input; x_l = act(caps_l(x_{l-1})) + x_{l-1}
///   out = input + res_scale * fuse_1x1(concat(x_1..x_L))
/// In the atoms layout x_0 is one capsule of F dims and is repeated across
/// the c types for the first residual add.
template <typename T>
class Rdcb {
 public:
  Rdcb() = default;
  Rdcb(const RdcbShape& shape, Rng& rng);

  [[nodiscard]] Var<T> forward(const Var<T>& input) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;

  [[nodiscard]] const RdcbShape& shape() const { return shape_; }
  [[nodiscard]] std::vector<ConvCapsuleLayer<T>>& capsule_layers() { return layers_; }
  [[nodiscard]] const std::vector<ConvCapsuleLayer<T>>& capsule_layers() const { return layers_; }
  [[nodiscard]] const std::vector<ActivationSite<T>>& activations() const { return acts_; }
  [[nodiscard]] WnConv2d<T>& fusion() { return fusion_; }
  [[nodiscard]] const WnConv2d<T>& fusion() const { return fusion_; }
  /// Capsule (types, dims) seen by layer l's input.
  [[nodiscard]] std::pair<int64_t, int64_t> input_geometry(std::size_t l) const;

 private:
  RdcbShape shape_;
  std::vector<ConvCapsuleLayer<T>> layers_;
  std::vector<ActivationSite<T>> acts_;
  WnConv2d<T> fusion_;
};

void validate_rdcb_shape(const RdcbShape& shape);

}  // namespace capsr
