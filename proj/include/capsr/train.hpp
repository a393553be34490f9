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
 * @file train.hpp
 * @brief Adam, the step learning-rate schedule and the training engine.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "capsr/checkpoint.hpp"
#include "capsr/data.hpp"
#include "capsr/losses.hpp"
#include "capsr/model.hpp"

namespace capsr {

struct TrainConfig {
  int64_t epochs = 2000;
  int64_t batch = 16;
  int patch_size = 128;  // HR side; LR patches are patch_size / r
  double lr = 1e-4;
  int64_t halving_period = 500;  // epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 0;
  int64_t validate_every = 10;    // epochs, 0 disables
  int64_t checkpoint_every = 50;  // epochs, 0 keeps only the final one
  bool deterministic = false;
  double clip_norm = 0;  // global gradient max-norm, 0 disables
  AugmentOptions augment;
  LossSpec loss;

  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;
};

/// lr0 * 0.5^floor(epoch / period).
double lr_at(int64_t epoch, const TrainConfig& config);

template <typename T>
class Adam {
 public:
  Adam(ParameterList<T> params, double beta1, double beta2, double eps);

  /// One bias-corrected update from the current gradients; a parameter
  /// without a gradient counts as zero. Throws NumericError naming the
  /// parameter (and batch, when given) before touching any state if a
  /// gradient is not finite.
  void step(double lr, int64_t batch_index = -1);

  /// Scales all gradients so their global L2 norm is at most max_norm.
  /// Returns the norm before scaling.
  double clip_gradients(double max_norm);

  [[nodiscard]] int64_t t() const { return t_; }
  [[nodiscard]] const ParameterList<T>& params() const { return params_; }
  [[nodiscard]] std::vector<StoredMoments> export_moments() const;
  void import_moments(const std::vector<StoredMoments>& moments, int64_t t);
  void zero_grad();

 private:
  ParameterList<T> params_;
  std::vector<Tensor4<T>> m_;
  std::vector<Tensor4<T>> v_;
  double beta1_;
  double beta2_;
  double eps_;
  int64_t t_ = 0;
};

struct HistoryRecord {
  int64_t epoch = 0;  // 1-based epoch just completed
  int64_t step = 0;   // optimizer steps so far
  double lr = 0;
  double train_loss = 0;  // mean batch loss over the epoch
  std::optional<double> val_psnr;
  std::optional<double> val_ssim;
  std::optional<double> val_msssim;
  std::optional<double> alpha;  // adaptive loss only
  std::optional<double> scale;

  /// One JSON object on a single line, no trailing newline.
  [[nodiscard]] std::string json_line() const;
  static HistoryRecord from_json_line(const std::string& line);
};

struct ValidationResult {
  double psnr = 0;
  double ssim = 0;
  double ms_ssim = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(const ModelConfig& model, const TrainConfig& train, std::string config_text = "");

  /// Restores weights, loss latents, optimizer moments, counters and the
  /// data RNG so that training continues exactly where it stopped.
  void resume(const Checkpoint& ckpt);
  [[nodiscard]] Checkpoint checkpoint() const;

  /// Forward, loss, backward and one Adam step. Returns the batch loss.
  double train_step(const Batch<T>& batch, double lr);

  /// Trains from the current epoch up to config.epochs. With a run
  /// directory, appends to history.jsonl and writes last.ckpt (plus
  /// best.ckpt by validation MS-SSIM). Returns the records of this call.
  std::vector<HistoryRecord> fit(const PairedDataset& train, const PairedDataset* valid,
                                 const std::filesystem::path& run_dir = {},
                                 std::ostream* log = nullptr);

  /// Whole-image validation, one image at a time, luminance, border crop r.
  [[nodiscard]] ValidationResult validate(const PairedDataset& valid) const;

  [[nodiscard]] const SrCapsModel<T>& model() const { return model_; }
  [[nodiscard]] SrCapsModel<T>& model() { return model_; }
  [[nodiscard]] const TrainingLoss<T>& loss() const { return loss_; }
  [[nodiscard]] const Adam<T>& optimizer() const { return adam_; }
  [[nodiscard]] int64_t epoch() const { return epoch_; }
  [[nodiscard]] int64_t step() const { return step_; }
  [[nodiscard]] const TrainConfig& config() const { return config_; }

 private:
  [[nodiscard]] ParameterList<T> all_parameters() const;

  TrainConfig config_;
  std::string config_text_;
  SrCapsModel<T> model_;
  TrainingLoss<T> loss_;
  Adam<T> adam_;
  Rng rng_;
  int64_t epoch_ = 0;
  int64_t step_ = 0;
  double best_msssim_ = -1;
};

/// The data RNG seed derived from the run seed (the model uses the run seed
/// itself).
uint64_t data_seed(uint64_t seed);

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace capsr
