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
 * @file checkpoint.hpp
 * @brief Binary checkpoint format.
 *
 * Layout, little-endian throughout:
 *
 *     "SRCAPS1\0"  u32 version  u64 seed  str config_text
 *     u32 count    { str name  u8 elem_bytes  i64 n c h w  data }...
 *     u8 has_state [ i64 step  i64 epoch  i64 adam_t  str rng_state
 *                    u32 count { str name  u8 elem_bytes  i64 n c h w  m  v }... ]
 *
 * where str is a u64 byte count followed by the bytes. Nothing in the file
 * depends on wall-clock time, so equal runs give equal bytes.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "capsr/layers.hpp"

namespace capsr {

inline constexpr uint32_t kCheckpointVersion = 1;

/// A tensor stored at its native precision.
struct StoredTensor {
  std::string name;
  Shape4 shape;
  uint8_t elem_bytes = 4;  // 4: float32, 8: float64
  std::vector<double> values;
};

struct StoredMoments {
  std::string name;
  Shape4 shape;
  uint8_t elem_bytes = 4;
  std::vector<double> m;
  std::vector<double> v;
};

struct TrainState {
  int64_t step = 0;
  int64_t epoch = 0;  // epochs completed
  int64_t adam_t = 0;
  std::string rng_state;
  std::vector<StoredMoments> moments;
};

struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  uint64_t seed = 0;
  std::string config_text;  // resolved run configuration, key = value lines
  std::vector<StoredTensor> params;
  std::optional<TrainState> state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

template <typename T>
StoredTensor store_tensor(const std::string& name, const Tensor4<T>& t);
template <typename T>
Tensor4<T> restore_tensor(const StoredTensor& s);

template <typename T>
std::vector<StoredTensor> store_parameters(const ParameterList<T>& params);

/// Copies stored values into `params` by name. Any missing, extra or
/// mis-shaped entry raises ConfigError listing every difference.
template <typename T>
void restore_parameters(const std::vector<StoredTensor>& stored, ParameterList<T>& params);

}  // namespace capsr
