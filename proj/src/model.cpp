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

#include "capsr/model.hpp"

#include <algorithm>
#include <sstream>

namespace capsr {

std::vector<int> upnet_factors(int scale) {
  switch (scale) {
    case 2:
      return {2};
    case 3:
      return {3};
    case 4:
      return {2, 2};
    default:
      throw ConfigError("unsupported scale factor " + std::to_string(scale) +
                        " (expected 2, 3 or 4)");
  }
}

std::vector<std::string> ModelConfig::violations() const {
  std::vector<std::string> out;
  if (blocks < 1) out.push_back("model.B must be >= 1 (got " + std::to_string(blocks) + ")");
  if (layers < 1) out.push_back("model.L must be >= 1 (got " + std::to_string(layers) + ")");
  if (capsules < 1) out.push_back("model.c must be >= 1 (got " + std::to_string(capsules) + ")");
  if (filters < 1) out.push_back("model.F must be >= 1 (got " + std::to_string(filters) + ")");
  if (capsules >= 1 && filters >= 1 && layout == CapsuleLayout::kPartition &&
      filters % capsules != 0) {
    out.push_back("model.F (" + std::to_string(filters) + ") must be divisible by model.c (" +
                  std::to_string(capsules) + ") in the partition layout");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    out.push_back("model.k must be a positive odd number (got " + std::to_string(kernel) + ")");
  }
  if (stride != 1) {
    out.push_back("model.st must be 1, residual paths need equal shapes (got " +
                  std::to_string(stride) + ")");
  }
  if (padding != "same") out.push_back("model.p must be 'same' (got '" + padding + "')");
  if (!(res_scale > 0 && res_scale <= 1)) {
    out.push_back("model.res_scale must lie in (0, 1] (got " + std::to_string(res_scale) + ")");
  }
  if (!(sq > 0)) out.push_back("model.sq must be > 0 (got " + std::to_string(sq) + ")");
  if (scale != 2 && scale != 3 && scale != 4) {
    out.push_back("model.r must be 2, 3 or 4 (got " + std::to_string(scale) + ")");
  }
  if (in_channels < 1 || out_channels < 1) out.push_back("image channel counts must be >= 1");
  return out;
}

void ModelConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid model configuration:";
  for (const auto& line : v) msg += "\n  - " + line;
  throw ConfigError(msg);
}

RdcbShape ModelConfig::block_shape() const {
  RdcbShape s;
  s.filters = filters;
  s.capsules = capsules;
  s.layers = layers;
  s.kernel = kernel;
  s.res_scale = res_scale;
  s.sq = sq;
  s.act = act;
  s.layout = layout;
  s.use_squash = use_squash;
  s.use_act = use_caps_act;
  return s;
}

std::string ModelSummary::str() const {
  std::ostringstream os;
  os << "parameters: " << total << "\n";
  for (const auto& [name, count] : modules) os << "  " << name << ": " << count << "\n";
  os << "receptive field (LR pixels): " << receptive_field << "\n";
  return os.str();
}

template <typename T>
SrCapsModel<T>::SrCapsModel(const ModelConfig& config, uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int k = config_.kernel;
  const int pad = (k - 1) / 2;
  const int64_t f = config_.filters;
  head_ = WnConv2d<T>(config_.in_channels, f, k, config_.stride, pad, rng);
  head_act_ = ActivationSite<T>(config_.act);
  const RdcbShape bs = config_.block_shape();
  for (int64_t b = 0; b < config_.blocks; ++b) blocks_.emplace_back(bs, rng);
  trail_ = WnConv2d<T>(f, f, k, 1, pad, rng);
  up_factors_ = upnet_factors(config_.scale);
  for (int r : up_factors_) {
    up_convs_.emplace_back(f, f * r * r, k, 1, pad, rng);
    up_acts_.emplace_back(config_.act);
  }
  up_out_ = WnConv2d<T>(f, config_.out_channels, k, 1, pad, rng);
}

template <typename T>
Var<T> SrCapsModel<T>::shallow_features(const Var<T>& lr) const {
  const Shape4 s = lr.shape();
  if (s.c != config_.in_channels) {
    throw ConfigError("model expects " + std::to_string(config_.in_channels) +
                      "-channel input, got " + s.str());
  }
  if (s.h < config_.kernel || s.w < config_.kernel) {
    throw ConfigError("input " + s.str() + " is smaller than the " +
                      std::to_string(config_.kernel) + "x" + std::to_string(config_.kernel) +
                      " kernel");
  }
  return head_act_(head_.forward(nn::mul_scalar(lr, T(1) / T(255))));
}

template <typename T>
Var<T> SrCapsModel<T>::upnet(const Var<T>& features) const {
  if (features.shape().c != config_.filters) {
    throw ConfigError("UPNet expects " + std::to_string(config_.filters) + " channels, got " +
                      features.shape().str());
  }
  Var<T> h = features;
  for (std::size_t i = 0; i < up_convs_.size(); ++i) {
    h = up_acts_[i](nn::pixel_shuffle(up_convs_[i].forward(h), up_factors_[i]));
  }
  return up_out_.forward(h);
}

template <typename T>
Var<T> SrCapsModel<T>::forward(const Var<T>& lr) const {
  const Var<T> f0 = shallow_features(lr);
  Var<T> h = f0;
  for (const auto& block : blocks_) h = block.forward(h);
  const Var<T> t = nn::add(trail_.forward(h), f0);
  return nn::mul_scalar(upnet(t), T(255));
}

template <typename T>
Tensor4<T> SrCapsModel<T>::predict(const Tensor4<T>& lr) const {
  NoGradGuard guard;
  Tensor4<T> out = forward(Var<T>::constant(lr)).value();
  for (auto& v : out.data()) v = std::clamp(v, T(0), T(255));
  return out;
}

template <typename T>
ParameterList<T> SrCapsModel<T>::parameters() const {
  ParameterList<T> out;
  head_.collect("head", out);
  head_act_.collect("head.act", out);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].collect("rdcb" + std::to_string(b), out);
  }
  trail_.collect("trail", out);
  for (std::size_t i = 0; i < up_convs_.size(); ++i) {
    up_convs_[i].collect("upnet.conv" + std::to_string(i), out);
    up_acts_[i].collect("upnet.act" + std::to_string(i), out);
  }
  up_out_.collect("upnet.out", out);
  return out;
}

template <typename T>
ModelSummary SrCapsModel<T>::summary() const {
  ModelSummary s;
  auto count = [](auto&& collect_fn) {
    ParameterList<T> list;
    collect_fn(list);
    return count_parameters(list);
  };
  s.modules.emplace_back("head", count([&](auto& l) {
                           head_.collect("head", l);
                           head_act_.collect("head.act", l);
                         }));
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    s.modules.emplace_back("rdcb" + std::to_string(b),
                           count([&](auto& l) { blocks_[b].collect("rdcb", l); }));
  }
  s.modules.emplace_back("trail", count([&](auto& l) { trail_.collect("trail", l); }));
  s.modules.emplace_back("upnet", count([&](auto& l) {
                           for (std::size_t i = 0; i < up_convs_.size(); ++i) {
                             up_convs_[i].collect("c", l);
                             up_acts_[i].collect("a", l);
                           }
                           up_out_.collect("o", l);
                         }));
  for (const auto& [name, n] : s.modules) s.total += n;

  // Each k x k conv widens the field by k - 1 pixels at its own resolution.
  const double grow = config_.kernel - 1;
  double rf = 1 + grow * static_cast<double>(2 + config_.blocks * config_.layers);
  double res = 1;
  rf += grow;  // first UPNet conv runs at LR resolution
  for (std::size_t i = 0; i < up_factors_.size(); ++i) {
    res *= up_factors_[i];
    rf += grow / res;  // following conv (next stage or output conv)
  }
  s.receptive_field = rf;
  return s;
}

template class SrCapsModel<float>;
template class SrCapsModel<double>;

}  // namespace capsr
