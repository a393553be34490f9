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
 * @file losses.hpp
 * @brief Differentiable training objectives.
 *
 * The free functions take images on whatever scale the caller uses and are
 * the building blocks; TrainingLoss wraps them for images on the [0, 255]
 * scale, rescales to [0, 1] and owns the learnable Barron parameters.
 */

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "capsr/layers.hpp"

namespace capsr {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
  int scales = 5;  // M, for MS-SSIM
  /// Per-scale exponents; empty selects the first M standard weights,
  /// renormalized to sum to 1. The luminance exponent equals the last one.
  std::vector<double> betas;

  [[nodiscard]] double c1() const { return (k1 * data_range) * (k1 * data_range); }
  [[nodiscard]] double c2() const { return (k2 * data_range) * (k2 * data_range); }
  [[nodiscard]] std::vector<double> resolved_betas() const;
  void validate() const;
};

/// The five standard MS-SSIM scale weights.
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_taps(int window, double sigma);

template <typename T>
struct SsimMaps {
  Var<T> ssim;  // l * cs
  Var<T> l;
  Var<T> cs;
};

/// Local SSIM maps over every channel, "valid" positions only: each map is
/// (n, c, h - window + 1, w - window + 1).
template <typename T>
SsimMaps<T> ssim_maps(const Var<T>& x, const Var<T>& y, const SsimParams& p);

/// Mean SSIM over channels and valid positions.
template <typename T>
Var<T> ssim_index(const Var<T>& x, const Var<T>& y, const SsimParams& p);

/// MS-SSIM: prod_{j<M} mean(cs_j)^b_j * mean(ssim_M)^b_M with 2x2 mean
/// pooling between scales.
template <typename T>
Var<T> ms_ssim_index(const Var<T>& x, const Var<T>& y, const SsimParams& p);

/// Largest M whose coarsest scale still fits the window, 0 if none.
int max_ms_ssim_scales(int64_t h, int64_t w, int window);

template <typename T>
Var<T> l1_loss(const Var<T>& sr, const Var<T>& hr);
template <typename T>
Var<T> mse_loss(const Var<T>& sr, const Var<T>& hr);
template <typename T>
Var<T> ssim_loss(const Var<T>& sr, const Var<T>& hr, const SsimParams& p);
template <typename T>
Var<T> ms_ssim_loss(const Var<T>& sr, const Var<T>& hr, const SsimParams& p);
template <typename T>
Var<T> mix_loss(const Var<T>& sr, const Var<T>& hr, double w_l1, double w_msssim,
                const SsimParams& p);

/// Barron's general robust loss, mean over elements of rho(sr - hr, alpha, c).
/// `alpha` and `scale` are scalar Vars; both may take gradients. Within 1e-5
/// of alpha = 2 or alpha = 0 the closed-form limits are used; alpha = -inf
/// selects the Welsch form.
template <typename T>
Var<T> barron_loss(const Var<T>& sr, const Var<T>& hr, const Var<T>& alpha, const Var<T>& scale);

/// Scalar rho(x, alpha, c), double precision, for reference and tests.
double barron_rho(double x, double alpha, double c);

/// Luminance-weighted sum of the RGB channels (n, 3, h, w) -> (n, 1, h, w).
template <typename T>
Var<T> luminance(const Var<T>& rgb);

/// Sobel gradient magnitude of a single-channel image with replicate padding.
template <typename T>
Var<T> sobel_magnitude(const Var<T>& gray);

template <typename T>
Var<T> sobel_edge_loss(const Var<T>& sr, const Var<T>& hr, double w_pixels, double w_edges);

struct RegionWeights {
  double edge = 0.7;
  double texture = 0.15;
  double smooth = 0.15;
  void validate() const;
};

struct RegionThresholds {
  double edge = 0.12;     // fraction of the maximum gradient
  double texture = 0.06;  // below this fraction a pixel is smooth
  void validate() const;
};

enum class RegionBase { kPsnr, kSsim };

/// Per-region distortion combined by weights normalized over non-empty
/// regions. kPsnr uses the region MSE, kSsim uses 1 - region mean SSIM. The
/// mask comes from the luminance of `hr`.
template <typename T>
Var<T> region_weighted_loss(const Var<T>& sr, const Var<T>& hr, const RegionWeights& w,
                            RegionBase base, const SsimParams& p,
                            const RegionThresholds& t = RegionThresholds{});

enum class LossKind {
  kL1,
  kMse,
  kSsim,
  kMsSsim,
  kMix,
  kBarron,
  kAdaptive,
  kL1Sobel,
  kAdaptiveSobel,
  kPsnr3,
  kSsim3,
};

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::kAdaptive;
  double mix_w_l1 = 0.16;
  double mix_w_msssim = 0.84;
  double barron_alpha = 1.0;   // initial value when adaptive
  double barron_scale = 0.01;  // initial value when adaptive
  double sobel_w_pixels = 1.0;
  double sobel_w_edges = 1.0;
  RegionWeights psnr3_weights{0.7, 0.15, 0.15};
  RegionWeights ssim3_weights{1.0, 0.0, 0.0};
  RegionThresholds thresholds;
  SsimParams ssim;

  void validate() const;
  [[nodiscard]] bool learnable() const {
    return kind == LossKind::kAdaptive || kind == LossKind::kAdaptiveSobel;
  }
};

/// Loss as used by training: inputs on the [0, 255] scale.
template <typename T>
class TrainingLoss {
 public:
  explicit TrainingLoss(const LossSpec& spec);

  [[nodiscard]] Var<T> operator()(const Var<T>& sr, const Var<T>& hr) const;
  /// Learnable latents ("loss.alpha_latent", "loss.scale_latent"), if any.
  [[nodiscard]] ParameterList<T> parameters() const;
  /// Current alpha and c (mapped from the latents when learnable).
  [[nodiscard]] double alpha() const;
  [[nodiscard]] double scale() const;
  [[nodiscard]] const LossSpec& spec() const { return spec_; }

 private:
  [[nodiscard]] Var<T> alpha_var() const;
  [[nodiscard]] Var<T> scale_var() const;

  LossSpec spec_;
  Var<T> alpha_latent_;
  Var<T> scale_latent_;
};

}  // namespace capsr
