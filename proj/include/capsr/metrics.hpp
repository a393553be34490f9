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
 * @file metrics.hpp
 * @brief Evaluation measures on images in [0, 255], double precision.
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capsr/losses.hpp"

namespace capsr {

using ImageD = Tensor4<double>;

/// Y = 0.299 R + 0.587 G + 0.114 B; (n, 3, h, w) -> (n, 1, h, w).
ImageD luminance(const ImageD& rgb);

/// Mean squared error on luminance; 3-channel inputs are converted first,
/// single-channel inputs are used as they are.
double mse(const ImageD& a, const ImageD& b);
/// 10 log10(255^2 / mse); +inf for identical images.
double psnr(const ImageD& a, const ImageD& b);
double psnr_from_mse(double mse_value);

/// SSIM settings for images on the [0, 255] scale.
SsimParams metric_ssim_params();

/// Mean SSIM / MS-SSIM over all channels of the given images. Metric mode
/// uses data_range = 255 unless the caller overrides it.
double ssim(const ImageD& a, const ImageD& b, const SsimParams& p = metric_ssim_params());
double ms_ssim(const ImageD& a, const ImageD& b, const SsimParams& p = metric_ssim_params());

/// Sobel gradient magnitude of a (1, 1, h, w) image, replicate padding.
ImageD sobel(const ImageD& gray);

enum class Region : uint8_t { kEdge = 0, kTexture = 1, kSmooth = 2 };

struct RegionMask {
  int64_t h = 0;
  int64_t w = 0;
  std::vector<uint8_t> labels;  // row-major, values of Region
  double t_edge = 0;
  double t_texture = 0;
  double g_max = 0;

  [[nodiscard]] Region at(int64_t y, int64_t x) const {
    return static_cast<Region>(labels[static_cast<std::size_t>(y * w + x)]);
  }
  [[nodiscard]] int64_t count(Region r) const;
};

/// Labels every pixel of a (1, 1, h, w) luminance image by its Sobel
/// magnitude relative to the image maximum. A constant image is all smooth.
RegionMask segment_regions(const ImageD& gray, const RegionThresholds& t = RegionThresholds{});

/// Region weights renormalized over the regions present in `counts`
/// (edge, texture, smooth). Falls back to equal weights over the present
/// regions when all of their weights are zero.
std::array<double, 3> effective_region_weights(const RegionWeights& w,
                                               const std::array<int64_t, 3>& counts);

double weighted_psnr_3(const ImageD& sr, const ImageD& hr, const RegionWeights& w,
                       const RegionThresholds& t = RegionThresholds{});
double weighted_ssim_3(const ImageD& sr, const ImageD& hr, const RegionWeights& w,
                       const SsimParams& p = metric_ssim_params(),
                       const RegionThresholds& t = RegionThresholds{});

enum class ChannelMode { kY, kRgb };
ChannelMode parse_channel_mode(const std::string& name);
std::string channel_mode_name(ChannelMode mode);

struct EvalOptions {
  int crop = 0;  // border pixels removed on each side before measuring
  ChannelMode channels = ChannelMode::kY;
  SsimParams ssim = metric_ssim_params();
  RegionWeights psnr3{0.7, 0.15, 0.15};
  RegionWeights ssim3{1.0, 0.0, 0.0};
  RegionThresholds thresholds;
};

struct ImageMetrics {
  std::string image;
  double psnr = 0;
  double ssim = 0;
  double ms_ssim = 0;
  double psnr3 = 0;
  double ssim3 = 0;
  int ms_ssim_scales = 0;
  std::optional<double> flip;
};

/// All metrics for one SR/HR pair of (1, 3, h, w) images in [0, 255].
/// MS-SSIM drops to the largest scale count the cropped image supports.
ImageMetrics evaluate_pair(const std::string& name, const ImageD& sr, const ImageD& hr,
                           const EvalOptions& options);

struct EvalReport {
  std::string dataset;
  int scale = 0;
  std::vector<ImageMetrics> rows;

  /// Arithmetic mean of every column; flip only if every row has it.
  [[nodiscard]] ImageMetrics mean() const;
  /// Header image,psnr,ssim,ms_ssim,psnr3,ssim3 (+ flip when merged).
  [[nodiscard]] std::string csv() const;
  [[nodiscard]] std::string summary_json() const;
  /// Attaches externally computed FLIP values by image name.
  void merge_flip(const std::map<std::string, double>& values);
};

/// Formats a metric value; +inf is written as "inf".
std::string format_metric(double v);

}  // namespace capsr
