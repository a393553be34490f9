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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capsr/errors.hpp"

namespace capsr {

/// Dimensions of a rank-4 NCHW array. Kernels reuse the same layout as
/// (out_channels, in_channels, kh, kw).
struct Shape4 {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  [[nodiscard]] int64_t numel() const { return n * c * h * w; }
  [[nodiscard]] int64_t plane() const { return h * w; }
  [[nodiscard]] bool valid() const { return n > 0 && c > 0 && h > 0 && w > 0; }
  [[nodiscard]] bool is_scalar() const { return n == 1 && c == 1 && h == 1 && w == 1; }
  [[nodiscard]] std::string str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) +
           ", " + std::to_string(w) + ")";
  }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense NCHW array owning its storage. A default-constructed tensor is
/// "unpopulated" (no shape, no data); every populated tensor has strictly
/// positive dimensions.
template <typename T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;

  explicit Tensor4(Shape4 shape, T fill = T(0)) : shape_(shape) {
    check_shape(shape);
    data_.assign(static_cast<std::size_t>(shape.numel()), fill);
  }

  Tensor4(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    check_shape(shape);
    if (static_cast<int64_t>(data_.size()) != shape.numel()) {
      throw UsageError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape.str());
    }
  }

  static Tensor4 scalar(T v) { return Tensor4({1, 1, 1, 1}, v); }

  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] const Shape4& shape() const { return shape_; }
  [[nodiscard]] int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  [[nodiscard]] std::span<T> data() { return data_; }
  [[nodiscard]] std::span<const T> data() const { return data_; }
  [[nodiscard]] T* ptr() { return data_.data(); }
  [[nodiscard]] const T* ptr() const { return data_.data(); }
  [[nodiscard]] std::vector<T>& storage() { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const { return data_; }

  [[nodiscard]] std::size_t offset(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return static_cast<std::size_t>(((n * shape_.c + c) * shape_.h + y) * shape_.w + x);
  }
  T& operator()(int64_t n, int64_t c, int64_t y, int64_t x) { return data_[offset(n, c, y, x)]; }
  const T& operator()(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data_[offset(n, c, y, x)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] T item() const {
    if (!shape_.is_scalar()) throw UsageError("item() on non-scalar tensor " + shape_.str());
    return data_[0];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  [[nodiscard]] Tensor4<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor4<U>(shape_, std::move(out));
  }

  /// Same storage viewed under another shape with equal element count.
  [[nodiscard]] Tensor4 reshaped(Shape4 shape) const {
    if (shape.numel() != shape_.numel()) {
      throw UsageError("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    return Tensor4(shape, data_);
  }

 private:
  static void check_shape(const Shape4& s) {
    if (!s.valid()) throw UsageError("tensor shape must be strictly positive, got " + s.str());
  }

  Shape4 shape_{};
  std::vector<T> data_;
};

}  // namespace capsr
