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
 * @file data.hpp
 * @brief PNG I/O, bicubic resampling, paired datasets and patch sampling.
 *
 * Images are (1, 3, h, w) double tensors holding 8-bit values in [0, 255].
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "capsr/layers.hpp"

namespace capsr {

using Image = Tensor4<double>;

/// Reads an 8-bit RGB PNG. Gray, alpha and 16-bit files are rejected.
Image load_png(const std::filesystem::path& path);
/// Writes an 8-bit RGB PNG; values are rounded and clamped to [0, 255].
void save_png(const std::filesystem::path& path, const Image& img);

/// Rounds to the nearest integer and clamps to [0, 255].
Image quantize(const Image& img);

struct ResizeOptions {
  double a = -0.5;        // cubic kernel parameter
  bool antialias = true;  // widen the kernel by 1/scale when shrinking
};

/// Separable cubic convolution to an explicit output size. Source samples
/// outside the image use the nearest edge pixel. Output is clamped to
/// [0, 255] but not rounded.
Image bicubic_resize(const Image& img, int64_t out_h, int64_t out_w,
                     const ResizeOptions& opt = ResizeOptions{});
/// Downscale by an integer factor r: output dims floor(dim / r).
Image bicubic_downscale(const Image& img, int r, const ResizeOptions& opt = ResizeOptions{});
/// Upscale by an integer factor r: output dims dim * r.
Image bicubic_upscale(const Image& img, int r, const ResizeOptions& opt = ResizeOptions{});

/// Cubic convolution kernel with parameter a.
double cubic_kernel(double x, double a = -0.5);

/// Drops trailing rows and columns so both dims are multiples of r.
Image mod_crop(const Image& img, int r);

/// The degradation used for synthesized pairs: mod_crop, bicubic
/// downscale, then quantization to 8 bits.
Image make_lr(const Image& hr, int r);

struct DatasetSpec {
  std::string root;
  std::string split;  // subdirectory of root; empty uses root itself
  int scale = 4;
  std::string hr_dir = "HR";
  std::string lr_dir;  // empty selects "LRx<scale>"
  std::string extension = ".png";

  [[nodiscard]] std::filesystem::path base() const;
  [[nodiscard]] std::filesystem::path hr_path() const;
  [[nodiscard]] std::filesystem::path lr_path() const;
  void validate() const;
};

/// One HR image and its LR counterpart. hr is mod-cropped so that its dims
/// are exactly scale times those of lr.
struct ImagePair {
  std::string id;
  Image hr;
  Image lr;
};

/// Builds a pair from an HR image and an optional LR image read from disk.
/// A provided LR image may be floor or ceil of the HR dims over r; both are
/// trimmed to the common floor size.
ImagePair make_pair(const std::string& id, const Image& hr, int r, const Image* lr = nullptr);

class PairedDataset {
 public:
  PairedDataset() = default;
  PairedDataset(int scale, std::vector<ImagePair> pairs);

  /// Loads every HR file (sorted by name). When the LR directory exists each
  /// HR file must have a same-named LR file; otherwise LR is synthesized.
  /// If the base directory has no HR subdirectory, the base itself is used.
  static PairedDataset load(const DatasetSpec& spec);

  [[nodiscard]] int scale() const { return scale_; }
  [[nodiscard]] std::size_t size() const { return pairs_.size(); }
  [[nodiscard]] bool empty() const { return pairs_.empty(); }
  [[nodiscard]] const ImagePair& operator[](std::size_t i) const { return pairs_[i]; }
  [[nodiscard]] const std::vector<ImagePair>& pairs() const { return pairs_; }
  [[nodiscard]] bool synthesized_lr() const { return synthesized_; }

 private:
  int scale_ = 4;
  std::vector<ImagePair> pairs_;
  bool synthesized_ = true;
};

struct PatchPair {
  Image hr;  // (1, 3, ps, ps)
  Image lr;  // (1, 3, ps / r, ps / r)
  std::string id;
  int64_t top = 0;   // HR coordinates, multiples of r
  int64_t left = 0;
};

/// Uniform random crop aligned to the LR grid.
PatchPair sample_patch(const ImagePair& pair, int ps, int r, Rng& rng);

struct AugmentOptions {
  bool flip = false;
  bool rotate = false;
  [[nodiscard]] bool enabled() const { return flip || rotate; }
};

Image flip_horizontal(const Image& img);
Image rotate90(const Image& img);

/// Applies the same random horizontal flip and 90-degree rotation to both
/// members. Draws nothing from rng when augmentation is disabled.
PatchPair augment(PatchPair p, const AugmentOptions& opt, Rng& rng);

/// A batch stacked along n, on the [0, 255] scale.
template <typename T>
struct Batch {
  Tensor4<T> lr;
  Tensor4<T> hr;
  std::vector<std::string> ids;
};

template <typename T>
Batch<T> stack_batch(const std::vector<PatchPair>& patches);

/// One epoch is a seeded permutation of the images large enough for a
/// patch, one patch per image, grouped into batches (the last may be
/// smaller).
class PatchSampler {
 public:
  PatchSampler(const PairedDataset& data, int patch_size, AugmentOptions augment = {});

  /// Image ids skipped because they are smaller than the patch.
  [[nodiscard]] const std::vector<std::string>& skipped() const { return skipped_; }
  [[nodiscard]] std::size_t eligible() const { return eligible_.size(); }

  [[nodiscard]] std::vector<std::vector<PatchPair>> epoch(std::size_t batch, Rng& rng) const;

 private:
  const PairedDataset* data_;
  int patch_size_;
  AugmentOptions augment_;
  std::vector<std::size_t> eligible_;
  std::vector<std::string> skipped_;
};

}  // namespace capsr
