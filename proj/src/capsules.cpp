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

#include "capsr/capsules.hpp"

namespace capsr {

CapsuleLayout parse_capsule_layout(const std::string& name) {
  if (name == "atoms") return CapsuleLayout::kAtoms;
  if (name == "partition") return CapsuleLayout::kPartition;
  throw ConfigError("unknown capsule layout '" + name + "' (expected atoms or partition)");
}

std::string capsule_layout_name(CapsuleLayout layout) {
  return layout == CapsuleLayout::kAtoms ? "atoms" : "partition";
}

template <typename T>
CapsuleState<T>::CapsuleState(Var<T> p, int64_t types_, int64_t dims_)
    : poses(std::move(p)), types(types_), dims(dims_) {
  if (types < 1 || dims < 1) throw ConfigError("capsule state needs types >= 1 and dims >= 1");
  if (poses.shape().c != types * dims) {
    throw ConfigError("capsule state: " + std::to_string(types) + " types x " +
                      std::to_string(dims) + " dims does not match " +
                      std::to_string(poses.shape().c) + " channels");
  }
}

namespace {

int64_t vote_rows(const CapsLayerShape& s) {
  const int64_t per_type = s.out_types * s.out_dims;
  return s.sharing == VoteSharing::kPerPair ? s.in_types * per_type : per_type;
}

}  // namespace

template <typename T>
ConvCapsuleLayer<T>::ConvCapsuleLayer(const CapsLayerShape& shape, Rng& rng) : shape_(shape) {
  if (shape.in_types < 1 || shape.in_dims < 1 || shape.out_types < 1 || shape.out_dims < 1) {
    throw ConfigError("capsule layer needs positive capsule counts and dims");
  }
  if (!(shape.sq > 0)) throw ConfigError("squashing constant must be > 0");
  votes_ = WnConv2d<T>(shape.in_dims, vote_rows(shape), shape.kernel, shape.stride, shape.padding,
                       rng);
  // A single bias per output channel of s_j.
  votes_.bias = Var<T>::leaf(Tensor4<T>({shape.out_types * shape.out_dims, 1, 1, 1}));
}

template <typename T>
Var<T> ConvCapsuleLayer<T>::routed_kernel() const {
  const Var<T> w = votes_.effective_weight();
  const int64_t per_type = shape_.out_types * shape_.out_dims;
  std::vector<Var<T>> columns;
  columns.reserve(static_cast<std::size_t>(shape_.in_types));
  for (int64_t i = 0; i < shape_.in_types; ++i) {
    columns.push_back(shape_.sharing == VoteSharing::kPerPair ? nn::slice(w, 0, i * per_type, per_type)
                                                              : w);
  }
  const Var<T> full = columns.size() == 1 ? columns[0] : nn::concat(columns, 1);
  return nn::mul_scalar(full, coupling());
}

template <typename T>
Tensor4<T> ConvCapsuleLayer<T>::vote_kernel(int64_t i, int64_t j) const {
  const Tensor4<T> w = votes_.effective_weight().value();
  const int64_t k = shape_.kernel;
  const int64_t row = shape_.in_dims * k * k;
  const int64_t first =
      (shape_.sharing == VoteSharing::kPerPair ? i * shape_.out_types * shape_.out_dims : 0) +
      j * shape_.out_dims;
  Tensor4<T> out({shape_.out_dims, shape_.in_dims, k, k});
  std::copy_n(w.ptr() + first * row, shape_.out_dims * row, out.ptr());
  return out;
}

template <typename T>
CapsuleState<T> ConvCapsuleLayer<T>::forward(const CapsuleState<T>& input) const {
  if (input.types != shape_.in_types || input.dims != shape_.in_dims) {
    throw ConfigError("capsule layer expects " + std::to_string(shape_.in_types) + " types x " +
                      std::to_string(shape_.in_dims) + " dims, got " +
                      std::to_string(input.types) + " x " + std::to_string(input.dims));
  }
  Var<T> s = nn::conv2d(input.poses, routed_kernel(), votes_.bias, shape_.stride, shape_.padding);
  if (shape_.use_squash) s = nn::squash(s, shape_.out_dims, static_cast<T>(shape_.sq));
  return CapsuleState<T>(std::move(s), shape_.out_types, shape_.out_dims);
}

void validate_rdcb_shape(const RdcbShape& s) {
  if (s.filters < 1 || s.capsules < 1 || s.layers < 1) {
    throw ConfigError("RDCB needs F >= 1, c >= 1 and L >= 1");
  }
  if (s.layout == CapsuleLayout::kPartition && s.filters % s.capsules != 0) {
    throw ConfigError("RDCB: F = " + std::to_string(s.filters) + " is not divisible by c = " +
                      std::to_string(s.capsules));
  }
  if (s.kernel % 2 == 0) throw ConfigError("RDCB: 'same' padding needs an odd kernel");
  if (!(s.res_scale > 0 && s.res_scale <= 1)) {
    // res_scale = 0 is accepted so that the scaled branch can be switched off.
    if (s.res_scale != 0) throw ConfigError("RDCB: res_scale must lie in (0, 1]");
  }
}

template <typename T>
std::pair<int64_t, int64_t> Rdcb<T>::input_geometry(std::size_t l) const {
  const auto& s = shape_;
  if (s.layout == CapsuleLayout::kPartition) return {s.capsules, s.filters / s.capsules};
  return {l == 0 ? 1 : s.capsules, s.filters};
}

template <typename T>
Rdcb<T>::Rdcb(const RdcbShape& shape, Rng& rng) : shape_(shape) {
  validate_rdcb_shape(shape);
  const bool atoms = shape.layout == CapsuleLayout::kAtoms;
  const int64_t out_dims = atoms ? shape.filters : shape.filters / shape.capsules;
  for (int64_t l = 0; l < shape.layers; ++l) {
    const auto [types, dims] = input_geometry(static_cast<std::size_t>(l));
    CapsLayerShape cs;
    cs.in_types = types;
    cs.in_dims = dims;
    cs.out_types = shape.capsules;
    cs.out_dims = out_dims;
    cs.kernel = shape.kernel;
    cs.stride = 1;
    cs.padding = (shape.kernel - 1) / 2;
    cs.sharing = atoms ? VoteSharing::kPerOutputType : VoteSharing::kPerPair;
    cs.sq = shape.sq;
    cs.use_squash = shape.use_squash;
    layers_.emplace_back(cs, rng);
    acts_.emplace_back(shape.use_act ? shape.act : nn::Activation::kIdentity);
  }
  const int64_t state_channels = shape.capsules * out_dims;
  fusion_ = WnConv2d<T>(shape.layers * state_channels, shape.filters, 1, 1, 0, rng);
}

template <typename T>
Var<T> Rdcb<T>::forward(const Var<T>& input) const {
  if (input.shape().c != shape_.filters) {
    throw ConfigError("RDCB expects " + std::to_string(shape_.filters) + " channels, got " +
                      std::to_string(input.shape().c));
  }
  const auto [t0, d0] = input_geometry(0);
  CapsuleState<T> x(input, t0, d0);
  std::vector<Var<T>> dense;
  dense.reserve(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const CapsuleState<T> u = layers_[l].forward(x);
    Var<T> residual = x.poses;
    if (u.poses.shape().c != residual.shape().c) {
      // atoms layout, first layer: one input capsule against c output types
      residual = nn::concat(std::vector<Var<T>>(static_cast<std::size_t>(u.types), x.poses), 1);
    }
    x = CapsuleState<T>(nn::add(acts_[l](u.poses), residual), u.types, u.dims);
    dense.push_back(x.poses);
  }
  const Var<T> cat = dense.size() == 1 ? dense[0] : nn::concat(dense, 1);
  const Var<T> fused = fusion_.forward(cat);
  return nn::add(input, nn::mul_scalar(fused, static_cast<T>(shape_.res_scale)));
}

template <typename T>
void Rdcb<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = prefix + ".caps" + std::to_string(l);
    layers_[l].collect(p, out);
    acts_[l].collect(p + ".act", out);
  }
  fusion_.collect(prefix + ".fusion", out);
}

template struct CapsuleState<float>;
template struct CapsuleState<double>;
template class ConvCapsuleLayer<float>;
template class ConvCapsuleLayer<double>;
template class Rdcb<float>;
template class Rdcb<double>;

}  // namespace capsr
