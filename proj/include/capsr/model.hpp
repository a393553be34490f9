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
 * @file model.hpp
 * @brief The capsule super-resolution network.
 *
 *   lr -> /255 -> head conv + act = f0
 *      -> B residual dense capsule blocks -> trailing conv, + f0
 *      -> UPNet (conv, pixel shuffle, act stages; output conv) -> *255
 */

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "capsr/capsules.hpp"

namespace capsr {

struct ModelConfig {
  int64_t blocks = 7;        // B
  int64_t layers = 3;        // L, capsule layers per block
  int64_t capsules = 4;      // c
  int64_t filters = 128;     // F
  int kernel = 3;            // k
  int stride = 1;            // st
  std::string padding = "same";
  nn::Activation act = nn::Activation::kReLU;
  double res_scale = 0.25;
  double sq = 1.0;
  int scale = 4;             // r
  int64_t in_channels = 3;
  int64_t out_channels = 3;
  CapsuleLayout layout = CapsuleLayout::kAtoms;
  bool use_squash = true;
  bool use_caps_act = true;

  /// Every violated constraint, one human-readable line each.
  [[nodiscard]] std::vector<std::string> violations() const;
  /// Throws ConfigError listing all violations.
  void validate() const;
  [[nodiscard]] RdcbShape block_shape() const;
};

struct ModelSummary {
  int64_t total = 0;
  std::vector<std::pair<std::string, int64_t>> modules;
  /// Receptive field of one output pixel, measured in input (LR) pixels.
  double receptive_field = 0;

  [[nodiscard]] std::string str() const;
};

template <typename T>
class SrCapsModel {
 public:
  /// Builds and initializes every parameter from `seed`.
  SrCapsModel(const ModelConfig& config, uint64_t seed);

  /// Differentiable pass; input and output are on the [0, 255] scale and the
  /// output is not clamped.
  [[nodiscard]] Var<T> forward(const Var<T>& lr) const;
  /// Inference pass without graph recording; output clamped to [0, 255].
  [[nodiscard]] Tensor4<T> predict(const Tensor4<T>& lr) const;
  /// Shallow features f0 = act(head(x / 255)).
  [[nodiscard]] Var<T> shallow_features(const Var<T>& lr) const;
  /// UPNet on F-channel features; output on the [0, 1] scale.
  [[nodiscard]] Var<T> upnet(const Var<T>& features) const;

  [[nodiscard]] ParameterList<T> parameters() const;
  [[nodiscard]] ModelSummary summary() const;
  [[nodiscard]] const ModelConfig& config() const { return config_; }

  [[nodiscard]] WnConv2d<T>& head() { return head_; }
  [[nodiscard]] WnConv2d<T>& trail() { return trail_; }
  [[nodiscard]] std::vector<Rdcb<T>>& blocks() { return blocks_; }
  [[nodiscard]] const std::vector<Rdcb<T>>& blocks() const { return blocks_; }
  [[nodiscard]] std::vector<WnConv2d<T>>& up_convs() { return up_convs_; }
  [[nodiscard]] WnConv2d<T>& up_out() { return up_out_; }

 private:
  ModelConfig config_;
  WnConv2d<T> head_;
  ActivationSite<T> head_act_;
  std::vector<Rdcb<T>> blocks_;
  WnConv2d<T> trail_;
  std::vector<WnConv2d<T>> up_convs_;
  std::vector<int> up_factors_;
  std::vector<ActivationSite<T>> up_acts_;
  WnConv2d<T> up_out_;
};

/// Pixel-shuffle factors used by UPNet for a given overall scale.
std::vector<int> upnet_factors(int scale);

}  // namespace capsr
