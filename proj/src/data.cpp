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

#include "capsr/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

namespace capsr {

namespace fs = std::filesystem;

namespace {

int64_t random_index(Rng& rng, int64_t n) {
  return std::min(n - 1, static_cast<int64_t>(uniform01(rng) * static_cast<double>(n)));
}

void require_rgb(const Image& img, const char* what) {
  if (img.shape().n != 1 || img.shape().c != 3) {
    throw UsageError(std::string(what) + " expects one RGB image, got " + img.shape().str());
  }
}

// Source taps for every output index along one axis; indices already
// clamped into [0, in).
std::vector<std::vector<std::pair<int64_t, double>>> taps_for_axis(int64_t in, int64_t out,
                                                                   const ResizeOptions& opt) {
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double ks = (opt.antialias && scale < 1) ? scale : 1.0;
  const double width = 4.0 / ks;
  std::vector<std::vector<std::pair<int64_t, double>>> taps(static_cast<std::size_t>(out));
  for (int64_t u = 0; u < out; ++u) {
    const double x = (static_cast<double>(u) + 0.5) / scale - 0.5;
    const auto left = static_cast<int64_t>(std::floor(x - width / 2));
    const auto count = static_cast<int64_t>(std::ceil(width)) + 2;
    double total = 0;
    auto& t = taps[static_cast<std::size_t>(u)];
    for (int64_t j = 0; j < count; ++j) {
      const int64_t idx = left + j;
      const double w = ks * cubic_kernel(ks * (x - static_cast<double>(idx)), opt.a);
      if (w == 0) continue;
      t.emplace_back(std::clamp<int64_t>(idx, 0, in - 1), w);
      total += w;
    }
    for (auto& [idx, w] : t) w /= total;
  }
  return taps;
}

}  // namespace

Image load_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool deep = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (!color || alpha || deep) {
    png_image_free(&img);
    throw IoError("not an 8-bit RGB PNG: " + path.string());
  }
  img.format = PNG_FORMAT_RGB;
  const int64_t h = img.height;
  const int64_t w = img.width;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("corrupt PNG " + path.string() + ": " + msg);
  }
  Image out({1, 3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        out(0, c, y, x) = buf[static_cast<std::size_t>((y * w + x) * 3 + c)];
  return out;
}

void save_png(const fs::path& path, const Image& img) {
  require_rgb(img, "save_png");
  const Shape4 s = img.shape();
  std::vector<png_byte> buf(static_cast<std::size_t>(s.h * s.w * 3));
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        const double v = std::clamp(std::round(img(0, c, y, x)), 0.0, 255.0);
        buf[static_cast<std::size_t>((y * s.w + x) * 3 + c)] = static_cast<png_byte>(v);
      }
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(s.w);
  out.height = static_cast<png_uint_32>(s.h);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

Image quantize(const Image& img) {
  Image out = img;
  for (auto& v : out.data()) v = std::clamp(std::round(v), 0.0, 255.0);
  return out;
}

double cubic_kernel(double x, double a) {
  const double t = std::abs(x);
  if (t <= 1) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0;
}

Image bicubic_resize(const Image& img, int64_t out_h, int64_t out_w, const ResizeOptions& opt) {
  const Shape4 s = img.shape();
  if (out_h < 1 || out_w < 1) {
    throw UsageError("bicubic_resize: degenerate output size " + std::to_string(out_h) + "x" +
                     std::to_string(out_w));
  }
  const auto ty = taps_for_axis(s.h, out_h, opt);
  const auto tx = taps_for_axis(s.w, out_w, opt);
  // Rows first, then columns.
  Image mid({s.n, s.c, out_h, s.w});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < out_h; ++y)
        for (int64_t x = 0; x < s.w; ++x) {
          double acc = 0;
          for (const auto& [iy, w] : ty[static_cast<std::size_t>(y)]) acc += w * img(n, c, iy, x);
          mid(n, c, y, x) = acc;
        }
  Image out({s.n, s.c, out_h, out_w});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < out_h; ++y)
        for (int64_t x = 0; x < out_w; ++x) {
          double acc = 0;
          for (const auto& [ix, w] : tx[static_cast<std::size_t>(x)]) acc += w * mid(n, c, y, ix);
          out(n, c, y, x) = std::clamp(acc, 0.0, 255.0);
        }
  return out;
}

Image bicubic_downscale(const Image& img, int r, const ResizeOptions& opt) {
  if (r < 1) throw UsageError("downscale factor must be >= 1");
  return bicubic_resize(img, img.shape().h / r, img.shape().w / r, opt);
}

Image bicubic_upscale(const Image& img, int r, const ResizeOptions& opt) {
  if (r < 1) throw UsageError("upscale factor must be >= 1");
  return bicubic_resize(img, img.shape().h * r, img.shape().w * r, opt);
}

Image mod_crop(const Image& img, int r) {
  const Shape4 s = img.shape();
  const int64_t h = s.h - s.h % r;
  const int64_t w = s.w - s.w % r;
  if (h < 1 || w < 1) throw UsageError("image " + s.str() + " is smaller than the scale factor");
  if (h == s.h && w == s.w) return img;
  Image out({s.n, s.c, h, w});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) out(n, c, y, x) = img(n, c, y, x);
  return out;
}

Image make_lr(const Image& hr, int r) { return quantize(bicubic_downscale(mod_crop(hr, r), r)); }

fs::path DatasetSpec::base() const { return split.empty() ? fs::path(root) : fs::path(root) / split; }

fs::path DatasetSpec::hr_path() const {
  const fs::path p = base() / hr_dir;
  return fs::is_directory(p) ? p : base();
}

fs::path DatasetSpec::lr_path() const {
  return base() / (lr_dir.empty() ? "LRx" + std::to_string(scale) : lr_dir);
}

void DatasetSpec::validate() const {
  if (root.empty()) throw ConfigError("data.root must be set");
  if (scale < 1) throw ConfigError("data.scale must be >= 1");
}

ImagePair make_pair(const std::string& id, const Image& hr, int r, const Image* lr) {
  require_rgb(hr, "make_pair");
  ImagePair p;
  p.id = id;
  if (lr == nullptr) {
    p.hr = mod_crop(hr, r);
    p.lr = make_lr(p.hr, r);
    return p;
  }
  require_rgb(*lr, "make_pair");
  const Shape4 hs = hr.shape();
  const Shape4 ls = lr->shape();
  auto fits = [r](int64_t l, int64_t h) { return l == h / r || l == (h + r - 1) / r; };
  if (!fits(ls.h, hs.h) || !fits(ls.w, hs.w)) {
    throw IoError("LR image for '" + id + "' is " + ls.str() + ", expected HR " + hs.str() +
                  " divided by " + std::to_string(r));
  }
  const int64_t lh = hs.h / r;
  const int64_t lw = hs.w / r;
  p.hr = mod_crop(hr, r);
  p.lr = Image({1, 3, lh, lw});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < lh; ++y)
      for (int64_t x = 0; x < lw; ++x) p.lr(0, c, y, x) = (*lr)(0, c, y, x);
  return p;
}

PairedDataset::PairedDataset(int scale, std::vector<ImagePair> pairs)
    : scale_(scale), pairs_(std::move(pairs)) {}

PairedDataset PairedDataset::load(const DatasetSpec& spec) {
  spec.validate();
  const fs::path hr_dir = spec.hr_path();
  if (!fs::is_directory(hr_dir)) throw IoError("dataset directory not found: " + hr_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(hr_dir)) {
    if (e.is_regular_file() && e.path().extension() == spec.extension) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const fs::path lr_dir = spec.lr_path();
  const bool have_lr = fs::is_directory(lr_dir);
  PairedDataset ds;
  ds.scale_ = spec.scale;
  ds.synthesized_ = !have_lr;
  for (const auto& f : files) {
    const Image hr = load_png(f);
    const std::string id = f.stem().string();
    if (have_lr) {
      const fs::path lf = lr_dir / f.filename();
      if (!fs::exists(lf)) throw IoError("missing LR file for '" + id + "': " + lf.string());
      const Image lr = load_png(lf);
      ds.pairs_.push_back(make_pair(id, hr, spec.scale, &lr));
    } else {
      ds.pairs_.push_back(make_pair(id, hr, spec.scale));
    }
  }
  return ds;
}

PatchPair sample_patch(const ImagePair& pair, int ps, int r, Rng& rng) {
  if (ps < r || ps % r != 0) {
    throw UsageError("patch size " + std::to_string(ps) + " must be a multiple of " +
                     std::to_string(r));
  }
  const Shape4 hs = pair.hr.shape();
  if (hs.h < ps || hs.w < ps) {
    throw UsageError("image '" + pair.id + "' " + hs.str() + " is smaller than the patch");
  }
  const int64_t lps = ps / r;
  const int64_t ly = random_index(rng, pair.lr.shape().h - lps + 1);
  const int64_t lx = random_index(rng, pair.lr.shape().w - lps + 1);
  PatchPair p;
  p.id = pair.id;
  p.top = ly * r;
  p.left = lx * r;
  p.hr = Image({1, 3, ps, ps});
  p.lr = Image({1, 3, lps, lps});
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < ps; ++y)
      for (int64_t x = 0; x < ps; ++x) p.hr(0, c, y, x) = pair.hr(0, c, p.top + y, p.left + x);
    for (int64_t y = 0; y < lps; ++y)
      for (int64_t x = 0; x < lps; ++x) p.lr(0, c, y, x) = pair.lr(0, c, ly + y, lx + x);
  }
  return p;
}

Image flip_horizontal(const Image& img) {
  const Shape4 s = img.shape();
  Image out(s);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t x = 0; x < s.w; ++x) out(n, c, y, x) = img(n, c, y, s.w - 1 - x);
  return out;
}

Image rotate90(const Image& img) {
  // Counter-clockwise: out(y, x) = in(x, w - 1 - y).
  const Shape4 s = img.shape();
  Image out({s.n, s.c, s.w, s.h});
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < s.w; ++y)
        for (int64_t x = 0; x < s.h; ++x) out(n, c, y, x) = img(n, c, x, s.w - 1 - y);
  return out;
}

PatchPair augment(PatchPair p, const AugmentOptions& opt, Rng& rng) {
  if (opt.flip && uniform01(rng) < 0.5) {
    p.hr = flip_horizontal(p.hr);
    p.lr = flip_horizontal(p.lr);
  }
  if (opt.rotate && uniform01(rng) < 0.5) {
    p.hr = rotate90(p.hr);
    p.lr = rotate90(p.lr);
  }
  return p;
}

template <typename T>
Batch<T> stack_batch(const std::vector<PatchPair>& patches) {
  if (patches.empty()) throw UsageError("cannot stack an empty batch");
  const Shape4 hs = patches.front().hr.shape();
  const Shape4 ls = patches.front().lr.shape();
  const auto n = static_cast<int64_t>(patches.size());
  Batch<T> b;
  b.hr = Tensor4<T>({n, hs.c, hs.h, hs.w});
  b.lr = Tensor4<T>({n, ls.c, ls.h, ls.w});
  for (int64_t i = 0; i < n; ++i) {
    const PatchPair& p = patches[static_cast<std::size_t>(i)];
    if (p.hr.shape() != hs || p.lr.shape() != ls) {
      throw UsageError("batch members differ in shape");
    }
    std::copy(p.hr.data().begin(), p.hr.data().end(),
              b.hr.data().begin() + i * hs.c * hs.h * hs.w);
    std::copy(p.lr.data().begin(), p.lr.data().end(),
              b.lr.data().begin() + i * ls.c * ls.h * ls.w);
    b.ids.push_back(p.id);
  }
  return b;
}

template Batch<float> stack_batch(const std::vector<PatchPair>&);
template Batch<double> stack_batch(const std::vector<PatchPair>&);

PatchSampler::PatchSampler(const PairedDataset& data, int patch_size, AugmentOptions augment)
    : data_(&data), patch_size_(patch_size), augment_(augment) {
  const int r = data.scale();
  if (patch_size < r || patch_size % r != 0) {
    throw ConfigError("patch size " + std::to_string(patch_size) + " must be a multiple of " +
                      std::to_string(r));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Shape4 s = data[i].hr.shape();
    if (s.h >= patch_size && s.w >= patch_size) {
      eligible_.push_back(i);
    } else {
      skipped_.push_back(data[i].id);
    }
  }
}

std::vector<std::vector<PatchPair>> PatchSampler::epoch(std::size_t batch, Rng& rng) const {
  if (batch == 0) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order = eligible_;
  // Fisher-Yates with the library's own uniform draw for portability.
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(random_index(rng, static_cast<int64_t>(i)));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<PatchPair>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i % batch == 0) out.emplace_back();
    PatchPair p = sample_patch((*data_)[order[i]], patch_size_, data_->scale(), rng);
    if (augment_.enabled()) p = augment(std::move(p), augment_, rng);
    out.back().push_back(std::move(p));
  }
  return out;
}

}  // namespace capsr
