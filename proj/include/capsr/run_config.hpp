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
 * @file run_config.hpp
 * @brief Flat key = value run configuration.
 *
 * One setting per line, dotted namespaces, `#` starts a comment and string
 * values may be double-quoted:
 *
 *     model.B = 7
 *     loss.name = "mix"
 *     mix.w_l1 = 0.16
 *
 * Unknown keys, malformed values and repeated keys are all rejected, and
 * every problem in a file is reported at once.
 */

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "capsr/data.hpp"
#include "capsr/metrics.hpp"
#include "capsr/model.hpp"
#include "capsr/train.hpp"

namespace capsr {

enum class Precision { kFloat, kDouble };

struct RunConfig {
  ModelConfig model;
  TrainConfig train;  // also carries the loss spec and the seed
  DatasetSpec data;   // data.split names the training split
  std::string valid_split = "valid";  // empty disables validation
  EvalOptions eval;
  int eval_crop = -1;  // -1 crops r pixels
  Precision precision = Precision::kFloat;

  RunConfig();

  /// Sets one key from its textual value. Throws ConfigError on an unknown
  /// key or an unparsable value.
  void set(const std::string& key, const std::string& value);
  [[nodiscard]] std::string get(const std::string& key) const;

  /// Every key in canonical order.
  static const std::vector<std::string>& keys();

  /// Canonical text, one `key = value` line per key; parse(to_text())
  /// reproduces the configuration.
  [[nodiscard]] std::string to_text() const;

  /// Cross-field problems (model, training, loss and data) one per line.
  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;

  /// The crop used for evaluation, resolving -1 to the scale.
  [[nodiscard]] EvalOptions eval_options() const;
  [[nodiscard]] DatasetSpec split(const std::string& name) const;
};

/// Parses configuration text on top of the defaults.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies `key=value` overrides in order, reporting every bad entry.
void apply_overrides(RunConfig& config, const std::vector<std::pair<std::string, std::string>>& kv);

std::string precision_name(Precision p);
Precision parse_precision(const std::string& name);

}  // namespace capsr
