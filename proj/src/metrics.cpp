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

#include "capsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace capsr {

namespace {

void require_same(const ImageD& a, const ImageD& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw UsageError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

ImageD as_gray(const ImageD& img) {
  if (img.shape().c == 1) return img;
  return luminance(img);
}

ImageD crop(const ImageD& img, int border) {
  if (border <= 0) return img;
  const Shape4 s = img.shape();
  if (s.h <= 2 * border || s.w <= 2 * border) {
    throw UsageError("cannot crop " + std::to_string(border) + " pixels from " + s.str());
  }
  ImageD out({s.n, s.c, s.h - 2 * border, s.w - 2 * border});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < out.shape().h; ++y)
        for (int64_t x = 0; x < out.shape().w; ++x) out(n, c, y, x) = img(n, c, y + border, x + border);
  return out;
}

double region_mean_mse(const ImageD& sr, const ImageD& hr, const RegionMask& mask,
                       const RegionWeights& w) {
  const Shape4 s = sr.shape();
  std::array<double, 3> sums{0, 0, 0};
  std::array<int64_t, 3> counts{0, 0, 0};
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) {
      const auto r = static_cast<std::size_t>(mask.at(y, x));
      ++counts[r];
      for (int64_t c = 0; c < s.c; ++c) {
        const double d = sr(0, c, y, x) - hr(0, c, y, x);
        sums[r] += d * d;
      }
    }
  }
  const auto weights = effective_region_weights(w, counts);
  double out = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    if (counts[r] > 0) out += weights[r] * sums[r] / static_cast<double>(counts[r] * s.c);
  }
  return out;
}

}  // namespace

ImageD luminance(const ImageD& rgb) {
  const Shape4 s = rgb.shape();
  if (s.c != 3) throw UsageError("luminance needs 3 channels, got " + s.str());
  ImageD out({s.n, 1, s.h, s.w});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t x = 0; x < s.w; ++x) {
        out(n, 0, y, x) =
            0.299 * rgb(n, 0, y, x) + 0.587 * rgb(n, 1, y, x) + 0.114 * rgb(n, 2, y, x);
      }
  return out;
}

double mse(const ImageD& a, const ImageD& b) {
  require_same(a, b, "mse");
  if (a.shape().c != 1 && a.shape().c != 3) {
    throw UsageError("mse expects 1 or 3 channels, got " + a.shape().str());
  }
  const ImageD ya = as_gray(a);
  const ImageD yb = as_gray(b);
  double total = 0;
  for (int64_t i = 0; i < ya.numel(); ++i) {
    const double d = ya[i] - yb[i];
    total += d * d;
  }
  return total / static_cast<double>(ya.numel());
}

double psnr_from_mse(double mse_value) {
  if (mse_value <= 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse_value);
}

double psnr(const ImageD& a, const ImageD& b) { return psnr_from_mse(mse(a, b)); }

SsimParams metric_ssim_params() {
  SsimParams p;
  p.data_range = 255.0;
  return p;
}

double ssim(const ImageD& a, const ImageD& b, const SsimParams& p) {
  require_same(a, b, "ssim");
  NoGradGuard guard;
  return ssim_index(Var<double>::constant(a), Var<double>::constant(b), p).item();
}

double ms_ssim(const ImageD& a, const ImageD& b, const SsimParams& p) {
  require_same(a, b, "ms_ssim");
  NoGradGuard guard;
  return ms_ssim_index(Var<double>::constant(a), Var<double>::constant(b), p).item();
}

ImageD sobel(const ImageD& gray) {
  NoGradGuard guard;
  return sobel_magnitude(Var<double>::constant(gray)).value();
}

int64_t RegionMask::count(Region r) const {
  return std::count(labels.begin(), labels.end(), static_cast<uint8_t>(r));
}

RegionMask segment_regions(const ImageD& gray, const RegionThresholds& t) {
  t.validate();
  const Shape4 s = gray.shape();
  if (s.n != 1 || s.c != 1) throw UsageError("segment_regions needs one gray image, got " + s.str());
  const ImageD g = sobel(gray);
  RegionMask m;
  m.h = s.h;
  m.w = s.w;
  m.g_max = *std::max_element(g.data().begin(), g.data().end());
  m.t_edge = t.edge * m.g_max;
  m.t_texture = t.texture * m.g_max;
  m.labels.resize(static_cast<std::size_t>(s.h * s.w));
  for (int64_t i = 0; i < s.h * s.w; ++i) {
    Region r = Region::kTexture;
    if (m.g_max <= 0 || g[i] < m.t_texture) {
      r = Region::kSmooth;
    } else if (g[i] > m.t_edge) {
      r = Region::kEdge;
    }
    m.labels[i] = static_cast<uint8_t>(r);
  }
  return m;
}

std::array<double, 3> effective_region_weights(const RegionWeights& w,
                                               const std::array<int64_t, 3>& counts) {
  const std::array<double, 3> raw{w.edge, w.texture, w.smooth};
  double total = 0;
  int present = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    if (counts[r] > 0) {
      total += raw[r];
      ++present;
    }
  }
  std::array<double, 3> out{0, 0, 0};
  for (std::size_t r = 0; r < 3; ++r) {
    if (counts[r] == 0) continue;
    out[r] = total > 0 ? raw[r] / total : 1.0 / present;
  }
  return out;
}

double weighted_psnr_3(const ImageD& sr, const ImageD& hr, const RegionWeights& w,
                       const RegionThresholds& t) {
  require_same(sr, hr, "weighted_psnr_3");
  w.validate();
  const ImageD ys = as_gray(sr);
  const ImageD yh = as_gray(hr);
  return psnr_from_mse(region_mean_mse(ys, yh, segment_regions(yh, t), w));
}

double weighted_ssim_3(const ImageD& sr, const ImageD& hr, const RegionWeights& w,
                       const SsimParams& p, const RegionThresholds& t) {
  require_same(sr, hr, "weighted_ssim_3");
  NoGradGuard guard;
  const ImageD ys = as_gray(sr);
  const ImageD yh = as_gray(hr);
  // The loss is 1 - region-weighted mean SSIM.
  const double loss = region_weighted_loss(Var<double>::constant(ys), Var<double>::constant(yh),
                                           w, RegionBase::kSsim, p, t)
                          .item();
  return 1.0 - loss;
}

ChannelMode parse_channel_mode(const std::string& name) {
  if (name == "y") return ChannelMode::kY;
  if (name == "rgb") return ChannelMode::kRgb;
  throw ConfigError("unknown channel mode '" + name + "' (expected y or rgb)");
}

std::string channel_mode_name(ChannelMode mode) { return mode == ChannelMode::kY ? "y" : "rgb"; }

ImageMetrics evaluate_pair(const std::string& name, const ImageD& sr, const ImageD& hr,
                           const EvalOptions& options) {
  require_same(sr, hr, "evaluate");
  if (sr.shape().n != 1 || sr.shape().c != 3) {
    throw UsageError("evaluate expects one RGB image, got " + sr.shape().str());
  }
  const ImageD a0 = crop(sr, options.crop);
  const ImageD b0 = crop(hr, options.crop);
  const bool y = options.channels == ChannelMode::kY;
  const ImageD a = y ? luminance(a0) : a0;
  const ImageD b = y ? luminance(b0) : b0;

  ImageMetrics m;
  m.image = name;
  double total = 0;
  for (int64_t i = 0; i < a.numel(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  m.psnr = psnr_from_mse(total / static_cast<double>(a.numel()));
  m.ssim = ssim(a, b, options.ssim);
  SsimParams ms = options.ssim;
  const int feasible = max_ms_ssim_scales(a.shape().h, a.shape().w, ms.window);
  if (feasible < ms.scales) {
    ms.scales = feasible;
    ms.betas.clear();
  }
  m.ms_ssim_scales = ms.scales;
  m.ms_ssim = ms.scales > 0 ? ms_ssim(a, b, ms) : std::numeric_limits<double>::quiet_NaN();

  // Region masks always follow the HR luminance.
  const RegionMask mask = segment_regions(luminance(b0), options.thresholds);
  m.psnr3 = psnr_from_mse(region_mean_mse(a, b, mask, options.psnr3));
  {
    NoGradGuard guard;
    if (y) {
      m.ssim3 = weighted_ssim_3(a, b, options.ssim3, options.ssim, options.thresholds);
    } else {
      // RGB mode: SSIM maps over the three channels, mask from HR luminance.
      m.ssim3 = 1.0 - region_weighted_loss(Var<double>::constant(a), Var<double>::constant(b),
                                           options.ssim3, RegionBase::kSsim, options.ssim,
                                           options.thresholds)
                          .item();
    }
  }
  return m;
}

ImageMetrics EvalReport::mean() const {
  ImageMetrics m;
  m.image = "mean";
  if (rows.empty()) return m;
  bool all_flip = true;
  double flip = 0;
  for (const auto& r : rows) {
    m.psnr += r.psnr;
    m.ssim += r.ssim;
    m.ms_ssim += r.ms_ssim;
    m.psnr3 += r.psnr3;
    m.ssim3 += r.ssim3;
    if (r.flip) {
      flip += *r.flip;
    } else {
      all_flip = false;
    }
  }
  const double n = static_cast<double>(rows.size());
  m.psnr /= n;
  m.ssim /= n;
  m.ms_ssim /= n;
  m.psnr3 /= n;
  m.ssim3 /= n;
  if (all_flip) m.flip = flip / n;
  return m;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string EvalReport::csv() const {
  const bool with_flip =
      !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.flip; });
  std::ostringstream os;
  os << "image,psnr,ssim,ms_ssim,psnr3,ssim3" << (with_flip ? ",flip" : "") << "\n";
  for (const auto& r : rows) {
    os << r.image << ',' << format_metric(r.psnr) << ',' << format_metric(r.ssim) << ','
       << format_metric(r.ms_ssim) << ',' << format_metric(r.psnr3) << ','
       << format_metric(r.ssim3);
    if (with_flip) os << ',' << format_metric(*r.flip);
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::summary_json() const {
  auto value = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_metric(v);
  };
  const ImageMetrics m = mean();
  nlohmann::json j;
  j["dataset"] = dataset;
  j["scale"] = scale;
  j["images"] = rows.size();
  j["mean"] = {{"psnr", value(m.psnr)},   {"ssim", value(m.ssim)},   {"ms_ssim", value(m.ms_ssim)},
               {"psnr3", value(m.psnr3)}, {"ssim3", value(m.ssim3)}};
  if (m.flip) j["mean"]["flip"] = value(*m.flip);
  return j.dump(2) + "\n";
}

void EvalReport::merge_flip(const std::map<std::string, double>& values) {
  for (auto& r : rows) {
    const auto it = values.find(r.image);
    if (it != values.end()) r.flip = it->second;
  }
}

}  // namespace capsr
