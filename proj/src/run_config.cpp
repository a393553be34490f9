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

#include "capsr/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

namespace capsr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const char* what, const std::string& v) {
  throw ConfigError(key + ": expected " + what + ", got '" + v + "'");
}

int64_t to_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, "an integer", v);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, "a number", v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, "true or false", v);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CAPSR_INT(KEY, EXPR)                                                     \
  Field {                                                                        \
    KEY,                                                                         \
        [](RunConfig& c, const std::string& k, const std::string& v) {           \
          EXPR = static_cast<std::remove_reference_t<decltype(EXPR)>>(to_int(k, v)); \
        },                                                                       \
        [](const RunConfig& c) { return std::to_string(EXPR); }                  \
  }

#define CAPSR_DOUBLE(KEY, EXPR)                                                             \
  Field {                                                                                   \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { EXPR = to_double(k, v); }, \
        [](const RunConfig& c) { return fmt(EXPR); }                                        \
  }

#define CAPSR_BOOL(KEY, EXPR)                                                             \
  Field {                                                                                 \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { EXPR = to_bool(k, v); }, \
        [](const RunConfig& c) { return std::string((EXPR) ? "true" : "false"); }         \
  }

#define CAPSR_STRING(KEY, EXPR)                                                             \
  Field {                                                                                   \
    KEY, [](RunConfig& c, const std::string&, const std::string& v) { EXPR = v; },          \
        [](const RunConfig& c) { return quote(EXPR); }                                      \
  }

#define CAPSR_ENUM(KEY, EXPR, PARSE, NAME)                                                  \
  Field {                                                                                   \
    KEY, [](RunConfig& c, const std::string&, const std::string& v) { EXPR = PARSE(v); },   \
        [](const RunConfig& c) { return quote(NAME(EXPR)); }                                \
  }

// Settings used by both the training loss and the evaluation metrics.
#define CAPSR_SHARED(KEY, LOSS, EVAL, CONV, FMT)                                  \
  Field {                                                                         \
    KEY,                                                                          \
        [](RunConfig& c, const std::string& k, const std::string& v) {            \
          const auto x = CONV(k, v);                                              \
          c.train.loss.LOSS = static_cast<decltype(c.train.loss.LOSS)>(x);        \
          c.eval.EVAL = static_cast<decltype(c.eval.EVAL)>(x);                    \
        },                                                                        \
        [](const RunConfig& c) { return FMT(c.train.loss.LOSS); }                 \
  }

std::string fmt_int(int v) { return std::to_string(v); }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      CAPSR_INT("model.B", c.model.blocks),
      CAPSR_INT("model.L", c.model.layers),
      CAPSR_INT("model.c", c.model.capsules),
      CAPSR_INT("model.F", c.model.filters),
      CAPSR_INT("model.k", c.model.kernel),
      CAPSR_INT("model.st", c.model.stride),
      CAPSR_STRING("model.p", c.model.padding),
      CAPSR_ENUM("model.act", c.model.act, nn::parse_activation, nn::activation_name),
      CAPSR_DOUBLE("model.res_scale", c.model.res_scale),
      CAPSR_DOUBLE("model.sq", c.model.sq),
      CAPSR_INT("model.r", c.model.scale),
      CAPSR_ENUM("model.layout", c.model.layout, parse_capsule_layout, capsule_layout_name),
      CAPSR_BOOL("model.squash", c.model.use_squash),
      CAPSR_BOOL("model.caps_act", c.model.use_caps_act),

      CAPSR_INT("train.seed", c.train.seed),
      CAPSR_BOOL("train.deterministic", c.train.deterministic),
      CAPSR_INT("train.epochs", c.train.epochs),
      CAPSR_INT("train.batch", c.train.batch),
      CAPSR_INT("train.patch", c.train.patch_size),
      CAPSR_DOUBLE("train.lr", c.train.lr),
      CAPSR_INT("train.halving_period", c.train.halving_period),
      CAPSR_DOUBLE("train.beta1", c.train.beta1),
      CAPSR_DOUBLE("train.beta2", c.train.beta2),
      CAPSR_DOUBLE("train.eps", c.train.eps),
      CAPSR_INT("train.validate_every", c.train.validate_every),
      CAPSR_INT("train.checkpoint_every", c.train.checkpoint_every),
      CAPSR_DOUBLE("train.clip_norm", c.train.clip_norm),
      CAPSR_BOOL("train.flip", c.train.augment.flip),
      CAPSR_BOOL("train.rotate", c.train.augment.rotate),
      CAPSR_ENUM("train.precision", c.precision, parse_precision, precision_name),

      CAPSR_ENUM("loss.name", c.train.loss.kind, parse_loss_kind, loss_kind_name),
      CAPSR_DOUBLE("mix.w_l1", c.train.loss.mix_w_l1),
      CAPSR_DOUBLE("mix.w_msssim", c.train.loss.mix_w_msssim),
      CAPSR_DOUBLE("barron.alpha", c.train.loss.barron_alpha),
      CAPSR_DOUBLE("barron.scale", c.train.loss.barron_scale),
      CAPSR_DOUBLE("sobel.w_pixels", c.train.loss.sobel_w_pixels),
      CAPSR_DOUBLE("sobel.w_edges", c.train.loss.sobel_w_edges),
      CAPSR_SHARED("psnr3.w_edge", psnr3_weights.edge, psnr3.edge, to_double, fmt),
      CAPSR_SHARED("psnr3.w_texture", psnr3_weights.texture, psnr3.texture, to_double, fmt),
      CAPSR_SHARED("psnr3.w_smooth", psnr3_weights.smooth, psnr3.smooth, to_double, fmt),
      CAPSR_SHARED("ssim3.w_edge", ssim3_weights.edge, ssim3.edge, to_double, fmt),
      CAPSR_SHARED("ssim3.w_texture", ssim3_weights.texture, ssim3.texture, to_double, fmt),
      CAPSR_SHARED("ssim3.w_smooth", ssim3_weights.smooth, ssim3.smooth, to_double, fmt),
      CAPSR_SHARED("regions.edge", thresholds.edge, thresholds.edge, to_double, fmt),
      CAPSR_SHARED("regions.texture", thresholds.texture, thresholds.texture, to_double, fmt),
      CAPSR_SHARED("ssim.window", ssim.window, ssim.window, to_int, fmt_int),
      CAPSR_SHARED("ssim.sigma", ssim.sigma, ssim.sigma, to_double, fmt),
      CAPSR_SHARED("ssim.k1", ssim.k1, ssim.k1, to_double, fmt),
      CAPSR_SHARED("ssim.k2", ssim.k2, ssim.k2, to_double, fmt),
      CAPSR_SHARED("ssim.scales", ssim.scales, ssim.scales, to_int, fmt_int),

      CAPSR_STRING("data.root", c.data.root),
      CAPSR_STRING("data.split", c.data.split),
      CAPSR_STRING("data.valid_split", c.valid_split),
      CAPSR_STRING("data.hr_dir", c.data.hr_dir),
      CAPSR_STRING("data.lr_dir", c.data.lr_dir),
      CAPSR_STRING("data.ext", c.data.extension),

      CAPSR_ENUM("eval.channels", c.eval.channels, parse_channel_mode, channel_mode_name),
      CAPSR_INT("eval.crop", c.eval_crop),
  };
  return kFields;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

// Strips a trailing comment and surrounding quotes.
std::string clean_value(const std::string& raw) {
  std::string v;
  bool quoted = false;
  for (char ch : raw) {
    if (ch == '"') quoted = !quoted;
    if (ch == '#' && !quoted) break;
    v += ch;
  }
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

std::string precision_name(Precision p) { return p == Precision::kFloat ? "float" : "double"; }

Precision parse_precision(const std::string& name) {
  if (name == "float" || name == "float32") return Precision::kFloat;
  if (name == "double" || name == "float64") return Precision::kDouble;
  throw ConfigError("unknown precision '" + name + "' (expected float or double)");
}

RunConfig::RunConfig() {
  data.split = "train";
  data.scale = model.scale;
  // Region and SSIM settings start identical for loss and metrics.
  eval.psnr3 = train.loss.psnr3_weights;
  eval.ssim3 = train.loss.ssim3_weights;
  eval.thresholds = train.loss.thresholds;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError("unknown key '" + key + "'");
  try {
    f->set(*this, key, value);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(key, 0) == 0) throw;
    throw ConfigError(key + ": " + msg);
  }
  data.scale = model.scale;
}

std::string RunConfig::get(const std::string& key) const {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError("unknown key '" + key + "'");
  return f->get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return kKeys;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> v = model.violations();
  for (auto& s : train.violations()) v.push_back(std::move(s));
  if (eval_crop < -1) v.push_back("eval.crop must be >= -1 (got " + std::to_string(eval_crop) + ")");
  auto check = [&v](const char* name, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      v.push_back(std::string(name) + ": " + e.what());
    }
  };
  check("psnr3", [this] { eval.psnr3.validate(); });
  check("ssim3", [this] { eval.ssim3.validate(); });
  check("regions", [this] { eval.thresholds.validate(); });
  if (data.extension.empty()) v.push_back("data.ext must not be empty");
  return v;
}

void RunConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o = eval;
  o.crop = eval_crop < 0 ? model.scale : eval_crop;
  return o;
}

DatasetSpec RunConfig::split(const std::string& name) const {
  DatasetSpec d = data;
  d.split = name;
  d.scale = model.scale;
  return d;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::vector<std::string> errors;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string where = origin + ":" + std::to_string(n) + ": ";
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected 'key = value', got '" + stripped + "'");
      continue;
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = clean_value(stripped.substr(eq + 1));
    if (const auto it = seen.find(key); it != seen.end()) {
      errors.push_back(where + "'" + key + "' already set on line " + std::to_string(it->second));
      continue;
    }
    seen[key] = n;
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      errors.push_back(where + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration file " + origin + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void apply_overrides(RunConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> errors;
  for (const auto& [k, v] : kv) {
    try {
      config.set(k, clean_value(v));
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid override:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

}  // namespace capsr
