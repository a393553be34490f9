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

#include "capsr/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "capsr/metrics.hpp"
#include "json.hpp"

namespace capsr {

namespace fs = std::filesystem;

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> v;
  if (epochs < 0) v.push_back("train.epochs must be >= 0");
  if (batch < 1) v.push_back("train.batch must be >= 1");
  if (patch_size < 1) v.push_back("train.patch must be >= 1");
  if (!(lr > 0)) v.push_back("train.lr must be > 0");
  if (halving_period < 1) v.push_back("train.halving_period must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1)) v.push_back("train.beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) v.push_back("train.beta2 must be in [0, 1)");
  if (!(eps > 0)) v.push_back("train.eps must be > 0");
  if (validate_every < 0) v.push_back("train.validate_every must be >= 0");
  if (checkpoint_every < 0) v.push_back("train.checkpoint_every must be >= 0");
  if (clip_norm < 0) v.push_back("train.clip_norm must be >= 0");
  try {
    loss.validate();
  } catch (const std::exception& e) {
    v.push_back(std::string("loss: ") + e.what());
  }
  return v;
}

void TrainConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid training configuration:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

double lr_at(int64_t epoch, const TrainConfig& config) {
  if (epoch < 0) throw UsageError("lr_at: epoch must be >= 0");
  return config.lr * std::ldexp(1.0, -static_cast<int>(epoch / config.halving_period));
}

template <typename T>
Adam<T>::Adam(ParameterList<T> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) {
    Var<T> v = p.var;
    v.zero_grad();
  }
}

template <typename T>
double Adam<T>::clip_gradients(double max_norm) {
  double sq = 0;
  for (const auto& p : params_) {
    if (!p.var.has_grad()) continue;
    for (T g : p.var.grad().data()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T f = static_cast<T>(max_norm / norm);
    for (auto& p : params_) {
      Var<T> v = p.var;
      if (!v.has_grad()) continue;
      for (T& g : v.mutable_grad().data()) g *= f;
    }
  }
  return norm;
}

template <typename T>
void Adam<T>::step(double lr, int64_t batch_index) {
  for (const auto& p : params_) {
    if (!p.var.has_grad()) continue;
    for (T g : p.var.grad().data()) {
      if (!std::isfinite(static_cast<double>(g))) {
        std::string where = "non-finite gradient in parameter '" + p.name + "'";
        if (batch_index >= 0) where += " at batch " + std::to_string(batch_index);
        throw NumericError(where);
      }
    }
  }
  ++t_;
  const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var<T> var = params_[i].var;
    const bool has = var.has_grad();
    auto value = var.mutable_value().data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = has ? static_cast<double>(var.grad().data()[j]) : 0.0;
      const double mj = beta1_ * static_cast<double>(m[j]) + (1 - beta1_) * g;
      const double vj = beta2_ * static_cast<double>(v[j]) + (1 - beta2_) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + eps_);
      value[j] = static_cast<T>(static_cast<double>(value[j]) - update);
    }
  }
}

template <typename T>
std::vector<StoredMoments> Adam<T>::export_moments() const {
  std::vector<StoredMoments> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    StoredMoments s;
    s.name = params_[i].name;
    s.shape = m_[i].shape();
    s.elem_bytes = sizeof(T) == 4 ? 4 : 8;
    s.m.assign(m_[i].data().begin(), m_[i].data().end());
    s.v.assign(v_[i].data().begin(), v_[i].data().end());
    out.push_back(std::move(s));
  }
  return out;
}

template <typename T>
void Adam<T>::import_moments(const std::vector<StoredMoments>& moments, int64_t t) {
  if (moments.size() != params_.size()) {
    throw ConfigError("optimizer state has " + std::to_string(moments.size()) +
                      " entries, model has " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& s = moments[i];
    if (s.name != params_[i].name || s.shape != m_[i].shape()) {
      throw ConfigError("optimizer state entry '" + s.name + "' " + s.shape.str() +
                        " does not match parameter '" + params_[i].name + "' " +
                        m_[i].shape().str());
    }
    m_[i] = Tensor4<T>(s.shape, std::vector<T>(s.m.begin(), s.m.end()));
    v_[i] = Tensor4<T>(s.shape, std::vector<T>(s.v.begin(), s.v.end()));
  }
  t_ = t;
}

std::string HistoryRecord::json_line() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["lr"] = lr;
  j["train_loss"] = train_loss;
  auto opt = [&j](const char* key, const std::optional<double>& v) {
    if (!v) return;
    if (std::isfinite(*v)) {
      j[key] = *v;
    } else {
      j[key] = format_metric(*v);
    }
  };
  opt("val_psnr", val_psnr);
  opt("val_ssim", val_ssim);
  opt("val_msssim", val_msssim);
  opt("alpha", alpha);
  opt("scale", scale);
  return j.dump();
}

HistoryRecord HistoryRecord::from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  HistoryRecord r;
  r.epoch = j.at("epoch").get<int64_t>();
  r.step = j.at("step").get<int64_t>();
  r.lr = j.at("lr").get<double>();
  r.train_loss = j.at("train_loss").get<double>();
  auto opt = [&j](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_string()) {
      return v.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::quiet_NaN();
    }
    return v.get<double>();
  };
  r.val_psnr = opt("val_psnr");
  r.val_ssim = opt("val_ssim");
  r.val_msssim = opt("val_msssim");
  r.alpha = opt("alpha");
  r.scale = opt("scale");
  return r;
}

uint64_t data_seed(uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw IoError("corrupt RNG state in checkpoint");
}

template <typename T>
Trainer<T>::Trainer(const ModelConfig& model, const TrainConfig& train, std::string config_text)
    : config_(train),
      config_text_(std::move(config_text)),
      model_((train.validate(), model), train.seed),
      loss_(train.loss),
      adam_(all_parameters(), train.beta1, train.beta2, train.eps),
      rng_(data_seed(train.seed)) {}

template <typename T>
ParameterList<T> Trainer<T>::all_parameters() const {
  ParameterList<T> out = model_.parameters();
  for (auto& p : loss_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
Checkpoint Trainer<T>::checkpoint() const {
  Checkpoint c;
  c.seed = config_.seed;
  c.config_text = config_text_;
  c.params = store_parameters(all_parameters());
  TrainState s;
  s.step = step_;
  s.epoch = epoch_;
  s.adam_t = adam_.t();
  s.rng_state = rng_state(rng_);
  s.moments = adam_.export_moments();
  c.state = std::move(s);
  return c;
}

template <typename T>
void Trainer<T>::resume(const Checkpoint& ckpt) {
  ParameterList<T> params = all_parameters();
  restore_parameters(ckpt.params, params);
  if (!ckpt.state) throw ConfigError("checkpoint has no training state to resume from");
  const TrainState& s = *ckpt.state;
  adam_.import_moments(s.moments, s.adam_t);
  step_ = s.step;
  epoch_ = s.epoch;
  set_rng_state(rng_, s.rng_state);
}

template <typename T>
double Trainer<T>::train_step(const Batch<T>& batch, double lr) {
  adam_.zero_grad();
  const Var<T> sr = model_.forward(Var<T>::constant(batch.lr));
  const Var<T> loss = loss_(sr, Var<T>::constant(batch.hr));
  const double value = static_cast<double>(loss.item());
  if (!std::isfinite(value)) {
    throw NumericError("non-finite loss at step " + std::to_string(step_) + " (epoch " +
                       std::to_string(epoch_ + 1) + ")");
  }
  backward(loss);
  if (config_.clip_norm > 0) adam_.clip_gradients(config_.clip_norm);
  adam_.step(lr, step_);
  ++step_;
  return value;
}

template <typename T>
ValidationResult Trainer<T>::validate(const PairedDataset& valid) const {
  ValidationResult r;
  if (valid.empty()) return r;
  EvalOptions opt;
  opt.crop = model_.config().scale;
  for (const auto& pair : valid.pairs()) {
    const Image sr = model_.predict(pair.lr.cast<T>()).template cast<double>();
    const ImageMetrics m = evaluate_pair(pair.id, sr, pair.hr, opt);
    r.psnr += m.psnr;
    r.ssim += m.ssim;
    r.ms_ssim += m.ms_ssim;
  }
  const auto n = static_cast<double>(valid.size());
  r.psnr /= n;
  r.ssim /= n;
  r.ms_ssim /= n;
  return r;
}

template <typename T>
std::vector<HistoryRecord> Trainer<T>::fit(const PairedDataset& train, const PairedDataset* valid,
                                           const fs::path& run_dir, std::ostream* log) {
  if (train.empty()) throw ConfigError("training dataset is empty");
  if (train.scale() != model_.config().scale) {
    throw ConfigError("dataset scale " + std::to_string(train.scale()) + " does not match model.r " +
                      std::to_string(model_.config().scale));
  }
  const PatchSampler sampler(train, config_.patch_size, config_.augment);
  for (const auto& id : sampler.skipped()) {
    if (log) *log << "warning: skipping '" << id << "', smaller than the patch\n";
  }
  if (sampler.eligible() == 0) {
    throw ConfigError("no training image is at least " + std::to_string(config_.patch_size) +
                      " pixels on each side");
  }
  const bool persist = !run_dir.empty();
  if (persist) fs::create_directories(run_dir);
  auto save = [&](const std::string& name) {
    try {
      save_checkpoint(run_dir / name, checkpoint());
    } catch (const IoError&) {
      if (log) *log << "warning: could not write " << name << "; state on disk may be partial\n";
      throw;
    }
  };

  std::vector<HistoryRecord> out;
  if (epoch_ >= config_.epochs) {
    if (persist) save("last.ckpt");
    return out;
  }
  while (epoch_ < config_.epochs) {
    const double lr = lr_at(epoch_, config_);
    const auto batches = sampler.epoch(static_cast<std::size_t>(config_.batch), rng_);
    double total = 0;
    for (const auto& b : batches) {
      try {
        total += train_step(stack_batch<T>(b), lr);
      } catch (const NumericError& e) {
        std::string msg = e.what();
        if (persist) {
          save("halt.ckpt");
          msg += "; state saved to " + (run_dir / "halt.ckpt").string();
        }
        throw NumericError(msg);
      }
    }
    ++epoch_;
    HistoryRecord rec;
    rec.epoch = epoch_;
    rec.step = step_;
    rec.lr = lr;
    rec.train_loss = total / static_cast<double>(batches.size());
    if (loss_.spec().learnable()) {
      rec.alpha = loss_.alpha();
      rec.scale = loss_.scale();
    }
    const bool last = epoch_ == config_.epochs;
    bool improved = false;
    if (valid != nullptr && !valid->empty() && config_.validate_every > 0 &&
        (epoch_ % config_.validate_every == 0 || last)) {
      const ValidationResult v = validate(*valid);
      rec.val_psnr = v.psnr;
      rec.val_ssim = v.ssim;
      rec.val_msssim = v.ms_ssim;
      if (v.ms_ssim > best_msssim_) {
        best_msssim_ = v.ms_ssim;
        improved = true;
      }
    }
    out.push_back(rec);
    if (persist) {
      std::ofstream h(run_dir / "history.jsonl", std::ios::app);
      h << rec.json_line() << "\n";
      if (!h) throw IoError("cannot append to " + (run_dir / "history.jsonl").string());
      if (last || (config_.checkpoint_every > 0 && epoch_ % config_.checkpoint_every == 0)) {
        save("last.ckpt");
      }
      if (improved) save("best.ckpt");
    }
    if (log) *log << rec.json_line() << "\n";
  }
  return out;
}

template class Adam<float>;
template class Adam<double>;
template class Trainer<float>;
template class Trainer<double>;

}  // namespace capsr
