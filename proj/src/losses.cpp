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

#include "capsr/losses.hpp"

#include <cmath>
#include <numeric>

#include "capsr/metrics.hpp"

namespace capsr {

namespace {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw UsageError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

template <typename T>
Var<T> scalar(double v) {
  return Var<T>::constant(Tensor4<T>::scalar(static_cast<T>(v)));
}

// Positive part with a tiny floor, so fractional powers stay finite.
template <typename T>
Var<T> clamp_positive(const Var<T>& x) {
  const T eps = T(1e-12);
  return nn::add_scalar(nn::activation(nn::add_scalar(x, -eps), nn::Activation::kReLU), eps);
}

constexpr double kAlphaEps = 1e-5;

}  // namespace

std::vector<double> SsimParams::resolved_betas() const {
  if (!betas.empty()) return betas;
  if (scales < 1 || scales > static_cast<int>(kMsSsimWeights.size())) {
    throw ConfigError("ssim.scales must be in [1, 5] when standard weights are used (got " +
                      std::to_string(scales) + ")");
  }
  std::vector<double> out(kMsSsimWeights.begin(), kMsSsimWeights.begin() + scales);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& b : out) b /= total;
  return out;
}

void SsimParams::validate() const {
  if (window < 1 || window % 2 == 0) throw ConfigError("ssim.window must be a positive odd size");
  if (!(sigma > 0)) throw ConfigError("ssim.sigma must be > 0");
  if (!(k1 > 0) || !(k2 > 0) || !(data_range > 0)) {
    throw ConfigError("ssim constants need k1, k2, data_range > 0");
  }
  if (scales < 1) throw ConfigError("ssim.scales must be >= 1");
  if (!betas.empty() && static_cast<int>(betas.size()) != scales) {
    throw ConfigError("ssim.betas must list one exponent per scale");
  }
}

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const double mid = (window - 1) / 2.0;
  double total = 0;
  for (int i = 0; i < window; ++i) {
    const double d = i - mid;
    taps[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

template <typename T>
SsimMaps<T> ssim_maps(const Var<T>& x, const Var<T>& y, const SsimParams& p) {
  p.validate();
  require_same_shape(x, y, "ssim");
  if (x.shape().h < p.window || x.shape().w < p.window) {
    throw UsageError("ssim: image " + x.shape().str() + " is smaller than the " +
                     std::to_string(p.window) + "-pixel window");
  }
  const auto taps64 = gaussian_taps(p.window, p.sigma);
  const std::vector<T> taps(taps64.begin(), taps64.end());
  auto filt = [&](const Var<T>& v) { return nn::separable_filter(v, taps); };
  const Var<T> mx = filt(x);
  const Var<T> my = filt(y);
  const Var<T> mx2 = nn::square(mx);
  const Var<T> my2 = nn::square(my);
  const Var<T> mxy = nn::mul(mx, my);
  const Var<T> sxx = nn::sub(filt(nn::square(x)), mx2);
  const Var<T> syy = nn::sub(filt(nn::square(y)), my2);
  const Var<T> sxy = nn::sub(filt(nn::mul(x, y)), mxy);
  const T c1 = static_cast<T>(p.c1());
  const T c2 = static_cast<T>(p.c2());
  SsimMaps<T> m;
  m.l = nn::div(nn::add_scalar(nn::mul_scalar(mxy, T(2)), c1), nn::add_scalar(nn::add(mx2, my2), c1));
  m.cs = nn::div(nn::add_scalar(nn::mul_scalar(sxy, T(2)), c2), nn::add_scalar(nn::add(sxx, syy), c2));
  m.ssim = nn::mul(m.l, m.cs);
  return m;
}

template <typename T>
Var<T> ssim_index(const Var<T>& x, const Var<T>& y, const SsimParams& p) {
  return nn::mean(ssim_maps(x, y, p).ssim);
}

int max_ms_ssim_scales(int64_t h, int64_t w, int window) {
  int m = 0;
  while (h >= window && w >= window) {
    ++m;
    h /= 2;
    w /= 2;
  }
  return m;
}

template <typename T>
Var<T> ms_ssim_index(const Var<T>& x, const Var<T>& y, const SsimParams& p) {
  p.validate();
  require_same_shape(x, y, "ms_ssim");
  const auto betas = p.resolved_betas();
  const int feasible = max_ms_ssim_scales(x.shape().h, x.shape().w, p.window);
  if (p.scales > feasible) {
    throw UsageError("ms_ssim: image " + x.shape().str() + " cannot support " +
                     std::to_string(p.scales) + " scales with a " + std::to_string(p.window) +
                     "-pixel window; max feasible M is " + std::to_string(feasible));
  }
  Var<T> xs = x;
  Var<T> ys = y;
  Var<T> result;
  for (int j = 0; j < p.scales; ++j) {
    const SsimMaps<T> maps = ssim_maps(xs, ys, p);
    const bool last = j + 1 == p.scales;
    const Var<T> term =
        nn::pow_scalar(clamp_positive(nn::mean(last ? maps.ssim : maps.cs)), static_cast<T>(betas[j]));
    result = result.defined() ? nn::mul(result, term) : term;
    if (!last) {
      xs = nn::avg_pool2(xs);
      ys = nn::avg_pool2(ys);
    }
  }
  return result;
}

template <typename T>
Var<T> l1_loss(const Var<T>& sr, const Var<T>& hr) {
  require_same_shape(sr, hr, "l1");
  return nn::mean(nn::abs(nn::sub(sr, hr)));
}

template <typename T>
Var<T> mse_loss(const Var<T>& sr, const Var<T>& hr) {
  require_same_shape(sr, hr, "mse");
  return nn::mean(nn::square(nn::sub(sr, hr)));
}

template <typename T>
Var<T> ssim_loss(const Var<T>& sr, const Var<T>& hr, const SsimParams& p) {
  return nn::add_scalar(nn::mul_scalar(ssim_index(sr, hr, p), T(-1)), T(1));
}

template <typename T>
Var<T> ms_ssim_loss(const Var<T>& sr, const Var<T>& hr, const SsimParams& p) {
  return nn::add_scalar(nn::mul_scalar(ms_ssim_index(sr, hr, p), T(-1)), T(1));
}

template <typename T>
Var<T> mix_loss(const Var<T>& sr, const Var<T>& hr, double w_l1, double w_msssim,
                const SsimParams& p) {
  if (w_l1 < 0 || w_msssim < 0) throw ParameterError("mix weights must be non-negative");
  Var<T> out = nn::mul_scalar(l1_loss(sr, hr), static_cast<T>(w_l1));
  if (w_msssim != 0) {
    out = nn::add(out, nn::mul_scalar(ms_ssim_loss(sr, hr, p), static_cast<T>(w_msssim)));
  }
  return out;
}

namespace {

struct BarronEval {
  double rho = 0;
  double d_x = 0;
  double d_alpha = 0;
  double d_c = 0;
};

// General branch value and partials; alpha must avoid 0 and 2.
BarronEval barron_general(double x, double alpha, double c) {
  const double z = (x / c) * (x / c);
  const double b = std::abs(alpha - 2);
  const double s = alpha < 2 ? -1.0 : 1.0;  // d|alpha - 2| / d alpha
  const double u = z / b + 1;
  const double half = alpha / 2;
  // u^half - 1 via expm1/log1p; the direct form cancels when z << b.
  const double log_u = std::log1p(z / b);
  const double up_m1 = std::expm1(half * log_u);
  const double up = up_m1 + 1;
  BarronEval e;
  e.rho = b / alpha * up_m1;
  const double d_z = 0.5 * std::pow(u, half - 1);
  e.d_x = d_z * 2 * x / (c * c);
  e.d_c = d_z * (-2 * z / c);
  const double a_coef = b / alpha;
  const double d_a_coef = (s * alpha - b) / (alpha * alpha);
  const double du = -z * s / (b * b);
  const double d_up = up * (0.5 * log_u + half * du / u);
  e.d_alpha = d_a_coef * up_m1 + a_coef * d_up;
  return e;
}

BarronEval barron_eval(double x, double alpha, double c) {
  const double z = (x / c) * (x / c);
  BarronEval e;
  if (std::isinf(alpha) && alpha < 0) {
    const double ez = std::exp(-z / 2);
    e.rho = 1 - ez;
    const double d_z = 0.5 * ez;
    e.d_x = d_z * 2 * x / (c * c);
    e.d_c = d_z * (-2 * z / c);
    return e;
  }
  double d_z = 0;
  double edge = 0;
  if (std::abs(alpha - 2) < kAlphaEps) {
    e.rho = z / 2;
    d_z = 0.5;
    edge = alpha < 2 ? 2 - kAlphaEps : 2 + kAlphaEps;
  } else if (std::abs(alpha) < kAlphaEps) {
    e.rho = std::log1p(z / 2);
    d_z = 1 / (z + 2);
    edge = alpha < 0 ? -kAlphaEps : kAlphaEps;
  } else {
    return barron_general(x, alpha, c);
  }
  e.d_x = d_z * 2 * x / (c * c);
  e.d_c = d_z * (-2 * z / c);
  // The alpha slope inside the special windows is taken from the window edge.
  e.d_alpha = barron_general(x, edge, c).d_alpha;
  return e;
}

}  // namespace

double barron_rho(double x, double alpha, double c) {
  if (!(c > 0)) throw ParameterError("barron scale c must be > 0");
  return barron_eval(x, alpha, c).rho;
}

template <typename T>
Var<T> barron_loss(const Var<T>& sr, const Var<T>& hr, const Var<T>& alpha, const Var<T>& scale) {
  require_same_shape(sr, hr, "barron");
  if (!alpha.shape().is_scalar() || !scale.shape().is_scalar()) {
    throw UsageError("barron: alpha and scale must be scalars");
  }
  const double a = static_cast<double>(alpha.item());
  const double c = static_cast<double>(scale.item());
  if (!(c > 0) || !std::isfinite(c)) {
    throw ParameterError("barron scale c must be > 0 (got " + std::to_string(c) + ")");
  }
  if (std::isnan(a) || (std::isinf(a) && a > 0)) {
    throw ParameterError("barron alpha must be finite or -inf");
  }
  const int64_t n = sr.value().numel();
  double total = 0;
  for (int64_t i = 0; i < n; ++i) {
    total += barron_eval(static_cast<double>(sr.value()[i]) - hr.value()[i], a, c).rho;
  }
  Tensor4<T> out = Tensor4<T>::scalar(static_cast<T>(total / static_cast<double>(n)));
  return Var<T>::op(std::move(out), {sr, hr, alpha, scale}, [a, c, n](Node<T>& self) {
    auto& srn = *self.inputs[0];
    auto& hrn = *self.inputs[1];
    auto& an = *self.inputs[2];
    auto& cn = *self.inputs[3];
    const double g = static_cast<double>(self.grad[0]) / static_cast<double>(n);
    double ga = 0;
    double gc = 0;
    for (int64_t i = 0; i < n; ++i) {
      const BarronEval e =
          barron_eval(static_cast<double>(srn.value[i]) - hrn.value[i], a, c);
      if (srn.requires_grad) srn.grad_buffer()[i] += static_cast<T>(g * e.d_x);
      if (hrn.requires_grad) hrn.grad_buffer()[i] -= static_cast<T>(g * e.d_x);
      ga += e.d_alpha;
      gc += e.d_c;
    }
    if (an.requires_grad) an.grad_buffer()[0] += static_cast<T>(g * ga);
    if (cn.requires_grad) cn.grad_buffer()[0] += static_cast<T>(g * gc);
  });
}

template <typename T>
Var<T> luminance(const Var<T>& rgb) {
  if (rgb.shape().c != 3) {
    throw UsageError("luminance needs 3 channels, got " + rgb.shape().str());
  }
  const Tensor4<T> w({1, 3, 1, 1}, std::vector<T>{T(0.299), T(0.587), T(0.114)});
  return nn::conv2d(rgb, Var<T>::constant(w), Var<T>(), 1, 0);
}

template <typename T>
Var<T> sobel_magnitude(const Var<T>& gray) {
  if (gray.shape().c != 1) {
    throw UsageError("sobel needs a single channel, got " + gray.shape().str());
  }
  const Tensor4<T> k({2, 1, 3, 3}, std::vector<T>{-1, 0, 1, -2, 0, 2, -1, 0, 1,  //
                                                  -1, -2, -1, 0, 0, 0, 1, 2, 1});
  const Var<T> g = nn::conv2d(nn::replicate_pad(gray, 1), Var<T>::constant(k), Var<T>(), 1, 0);
  const Var<T> gx = nn::slice(g, 1, 0, 1);
  const Var<T> gy = nn::slice(g, 1, 1, 1);
  return nn::sqrt(nn::add(nn::square(gx), nn::square(gy)));
}

template <typename T>
Var<T> sobel_edge_loss(const Var<T>& sr, const Var<T>& hr, double w_pixels, double w_edges) {
  require_same_shape(sr, hr, "sobel_edge");
  if (w_pixels < 0 || w_edges < 0) throw ParameterError("sobel weights must be non-negative");
  const Var<T> edges = l1_loss(sobel_magnitude(luminance(sr)), sobel_magnitude(luminance(hr)));
  return nn::add(nn::mul_scalar(l1_loss(sr, hr), static_cast<T>(w_pixels)),
                 nn::mul_scalar(edges, static_cast<T>(w_edges)));
}

void RegionWeights::validate() const {
  if (edge < 0 || texture < 0 || smooth < 0) {
    throw ParameterError("region weights must be non-negative");
  }
  if (edge + texture + smooth <= 0) throw ParameterError("region weights are all zero");
}

void RegionThresholds::validate() const {
  if (!(texture >= 0) || !(edge >= texture)) {
    throw ConfigError("region thresholds need edge >= texture >= 0");
  }
}

template <typename T>
Var<T> region_weighted_loss(const Var<T>& sr, const Var<T>& hr, const RegionWeights& w,
                            RegionBase base, const SsimParams& p, const RegionThresholds& t) {
  require_same_shape(sr, hr, "region_weighted");
  w.validate();
  t.validate();
  const Shape4 s = sr.shape();
  if (s.c != 3 && s.c != 1) {
    throw UsageError("region_weighted needs RGB or gray input, got " + s.str());
  }
  const int half = (p.window - 1) / 2;
  Var<T> total;
  for (int64_t n = 0; n < s.n; ++n) {
    ImageD gray({1, 1, s.h, s.w});
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t x = 0; x < s.w; ++x) {
        const auto& v = hr.value();
        gray(0, 0, y, x) = s.c == 1 ? static_cast<double>(v(n, 0, y, x))
                                    : 0.299 * v(n, 0, y, x) + 0.587 * v(n, 1, y, x) +
                                          0.114 * v(n, 2, y, x);
      }
    }
    const RegionMask mask = segment_regions(gray, t);
    const Var<T> a = nn::slice(sr, 0, n, 1);
    const Var<T> b = nn::slice(hr, 0, n, 1);
    Var<T> dist_map;
    int64_t y0 = 0;
    int64_t x0 = 0;
    if (base == RegionBase::kPsnr) {
      dist_map = nn::square(nn::sub(a, b));
    } else {
      dist_map = ssim_maps(a, b, p).ssim;
      y0 = half;
      x0 = half;
    }
    const Shape4 ms = dist_map.shape();
    std::array<Tensor4<T>, 3> masks;
    std::array<int64_t, 3> counts{0, 0, 0};
    for (auto& m : masks) m = Tensor4<T>(ms);
    for (int64_t y = 0; y < ms.h; ++y) {
      for (int64_t x = 0; x < ms.w; ++x) {
        const auto r = static_cast<std::size_t>(mask.at(y + y0, x + x0));
        ++counts[r];
        for (int64_t c = 0; c < ms.c; ++c) masks[r](0, c, y, x) = T(1);
      }
    }
    const auto weights = effective_region_weights(w, counts);
    Var<T> image_loss = scalar<T>(0.0);
    for (std::size_t r = 0; r < 3; ++r) {
      if (counts[r] == 0 || weights[r] == 0) continue;
      const double denom = static_cast<double>(counts[r] * ms.c);
      Var<T> region_mean = nn::mul_scalar(nn::sum(nn::mul(dist_map, Var<T>::constant(masks[r]))),
                                          static_cast<T>(1.0 / denom));
      Var<T> dist = base == RegionBase::kPsnr
                        ? region_mean
                        : nn::add_scalar(nn::mul_scalar(region_mean, T(-1)), T(1));
      image_loss = nn::add(image_loss, nn::mul_scalar(dist, static_cast<T>(weights[r])));
    }
    total = total.defined() ? nn::add(total, image_loss) : image_loss;
  }
  return nn::mul_scalar(total, static_cast<T>(1.0 / static_cast<double>(s.n)));
}

LossKind parse_loss_kind(const std::string& name) {
  static const std::pair<const char*, LossKind> kNames[] = {
      {"l1", LossKind::kL1},
      {"mse", LossKind::kMse},
      {"ssim", LossKind::kSsim},
      {"ms_ssim", LossKind::kMsSsim},
      {"mix", LossKind::kMix},
      {"barron", LossKind::kBarron},
      {"adaptive", LossKind::kAdaptive},
      {"l1_sobel", LossKind::kL1Sobel},
      {"adaptive_sobel", LossKind::kAdaptiveSobel},
      {"psnr3", LossKind::kPsnr3},
      {"ssim3", LossKind::kSsim3},
  };
  for (const auto& [n, k] : kNames) {
    if (name == n) return k;
  }
  throw ConfigError("unknown loss '" + name +
                    "' (expected l1, mse, ssim, ms_ssim, mix, barron, adaptive, l1_sobel, "
                    "adaptive_sobel, psnr3 or ssim3)");
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kL1:
      return "l1";
    case LossKind::kMse:
      return "mse";
    case LossKind::kSsim:
      return "ssim";
    case LossKind::kMsSsim:
      return "ms_ssim";
    case LossKind::kMix:
      return "mix";
    case LossKind::kBarron:
      return "barron";
    case LossKind::kAdaptive:
      return "adaptive";
    case LossKind::kL1Sobel:
      return "l1_sobel";
    case LossKind::kAdaptiveSobel:
      return "adaptive_sobel";
    case LossKind::kPsnr3:
      return "psnr3";
    case LossKind::kSsim3:
      return "ssim3";
  }
  return "unknown";
}

void LossSpec::validate() const {
  ssim.validate();
  if (mix_w_l1 < 0 || mix_w_msssim < 0) throw ConfigError("mix weights must be non-negative");
  if (sobel_w_pixels < 0 || sobel_w_edges < 0) {
    throw ConfigError("sobel weights must be non-negative");
  }
  if (!(barron_scale > 0)) throw ConfigError("barron.c must be > 0");
  if (learnable() && !(barron_alpha > 0 && barron_alpha < 2)) {
    throw ConfigError("adaptive loss needs an initial barron.alpha in (0, 2)");
  }
  if (std::isnan(barron_alpha) || (std::isinf(barron_alpha) && barron_alpha > 0)) {
    throw ConfigError("barron.alpha must be finite or -inf");
  }
  psnr3_weights.validate();
  ssim3_weights.validate();
  thresholds.validate();
}

template <typename T>
TrainingLoss<T>::TrainingLoss(const LossSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.learnable()) {
    // alpha = 2 sigmoid(la), c = softplus(lc)
    const double la = std::log(spec_.barron_alpha / (2 - spec_.barron_alpha));
    const double lc = std::log(std::expm1(spec_.barron_scale));
    alpha_latent_ = Var<T>::leaf(Tensor4<T>::scalar(static_cast<T>(la)));
    scale_latent_ = Var<T>::leaf(Tensor4<T>::scalar(static_cast<T>(lc)));
  }
}

template <typename T>
Var<T> TrainingLoss<T>::alpha_var() const {
  if (spec_.learnable()) return nn::mul_scalar(nn::sigmoid(alpha_latent_), T(2));
  return scalar<T>(spec_.barron_alpha);
}

template <typename T>
Var<T> TrainingLoss<T>::scale_var() const {
  if (spec_.learnable()) return nn::softplus(scale_latent_);
  return scalar<T>(spec_.barron_scale);
}

template <typename T>
double TrainingLoss<T>::alpha() const {
  NoGradGuard guard;
  return static_cast<double>(alpha_var().item());
}

template <typename T>
double TrainingLoss<T>::scale() const {
  NoGradGuard guard;
  return static_cast<double>(scale_var().item());
}

template <typename T>
ParameterList<T> TrainingLoss<T>::parameters() const {
  ParameterList<T> out;
  if (spec_.learnable()) {
    out.push_back({"loss.alpha_latent", alpha_latent_});
    out.push_back({"loss.scale_latent", scale_latent_});
  }
  return out;
}

template <typename T>
Var<T> TrainingLoss<T>::operator()(const Var<T>& sr255, const Var<T>& hr255) const {
  require_same_shape(sr255, hr255, "loss");
  const Var<T> sr = nn::mul_scalar(sr255, T(1) / T(255));
  const Var<T> hr = nn::mul_scalar(hr255, T(1) / T(255));
  const auto& s = spec_;
  switch (s.kind) {
    case LossKind::kL1:
      return l1_loss(sr, hr);
    case LossKind::kMse:
      return mse_loss(sr, hr);
    case LossKind::kSsim:
      return ssim_loss(sr, hr, s.ssim);
    case LossKind::kMsSsim:
      return ms_ssim_loss(sr, hr, s.ssim);
    case LossKind::kMix:
      return mix_loss(sr, hr, s.mix_w_l1, s.mix_w_msssim, s.ssim);
    case LossKind::kBarron:
    case LossKind::kAdaptive:
      return barron_loss(sr, hr, alpha_var(), scale_var());
    case LossKind::kL1Sobel:
      return sobel_edge_loss(sr, hr, s.sobel_w_pixels, s.sobel_w_edges);
    case LossKind::kAdaptiveSobel: {
      const Var<T> edges =
          l1_loss(sobel_magnitude(luminance(sr)), sobel_magnitude(luminance(hr)));
      return nn::add(
          nn::mul_scalar(barron_loss(sr, hr, alpha_var(), scale_var()),
                         static_cast<T>(s.sobel_w_pixels)),
          nn::mul_scalar(edges, static_cast<T>(s.sobel_w_edges)));
    }
    case LossKind::kPsnr3:
      return region_weighted_loss(sr, hr, s.psnr3_weights, RegionBase::kPsnr, s.ssim,
                                  s.thresholds);
    case LossKind::kSsim3:
      return region_weighted_loss(sr, hr, s.ssim3_weights, RegionBase::kSsim, s.ssim,
                                  s.thresholds);
  }
  throw ConfigError("unhandled loss kind");
}

#define CAPSR_INSTANTIATE_LOSSES(T)                                                          \
  template SsimMaps<T> ssim_maps(const Var<T>&, const Var<T>&, const SsimParams&);           \
  template Var<T> ssim_index(const Var<T>&, const Var<T>&, const SsimParams&);               \
  template Var<T> ms_ssim_index(const Var<T>&, const Var<T>&, const SsimParams&);            \
  template Var<T> l1_loss(const Var<T>&, const Var<T>&);                                     \
  template Var<T> mse_loss(const Var<T>&, const Var<T>&);                                    \
  template Var<T> ssim_loss(const Var<T>&, const Var<T>&, const SsimParams&);                \
  template Var<T> ms_ssim_loss(const Var<T>&, const Var<T>&, const SsimParams&);             \
  template Var<T> mix_loss(const Var<T>&, const Var<T>&, double, double, const SsimParams&); \
  template Var<T> barron_loss(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&);   \
  template Var<T> luminance(const Var<T>&);                                                  \
  template Var<T> sobel_magnitude(const Var<T>&);                                            \
  template Var<T> sobel_edge_loss(const Var<T>&, const Var<T>&, double, double);             \
  template Var<T> region_weighted_loss(const Var<T>&, const Var<T>&, const RegionWeights&,   \
                                       RegionBase, const SsimParams&,                        \
                                       const RegionThresholds&);                             \
  template class TrainingLoss<T>;

CAPSR_INSTANTIATE_LOSSES(float)
CAPSR_INSTANTIATE_LOSSES(double)

}  // namespace capsr
