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

#include "capsr/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace capsr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'R', 'C', 'A', 'P', 'S', '1', '\0'};

class Writer {
 public:
  template <typename U>
  void pod(U v) {
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out_.append(buf, sizeof(U));
  }
  void str(const std::string& s) {
    pod<uint64_t>(s.size());
    out_ += s;
  }
  void shape(const Shape4& s) {
    pod<int64_t>(s.n);
    pod<int64_t>(s.c);
    pod<int64_t>(s.h);
    pod<int64_t>(s.w);
  }
  void values(const std::vector<double>& v, uint8_t bytes) {
    for (double x : v) {
      if (bytes == 4) {
        pod<float>(static_cast<float>(x));
      } else {
        pod<double>(x);
      }
    }
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  [[nodiscard]] std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : b_(bytes), origin_(std::move(origin)) {}

  template <typename U>
  U pod() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string str() {
    const auto n = pod<uint64_t>();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Shape4 shape() {
    Shape4 s;
    s.n = pod<int64_t>();
    s.c = pod<int64_t>();
    s.h = pod<int64_t>();
    s.w = pod<int64_t>();
    if (!s.valid()) fail("invalid tensor shape " + s.str());
    return s;
  }
  uint8_t elem_bytes() {
    const auto e = pod<uint8_t>();
    if (e != 4 && e != 8) fail("unknown element size " + std::to_string(e));
    return e;
  }
  std::vector<double> values(int64_t n, uint8_t bytes) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = bytes == 4 ? static_cast<double>(pod<float>()) : pod<double>();
    return v;
  }
  void expect_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(b_.data(), kMagic, sizeof(kMagic)) != 0) fail("not a capsr checkpoint");
    pos_ += sizeof(kMagic);
  }
  [[nodiscard]] bool at_end() const { return pos_ == b_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("checkpoint " + origin_ + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) fail("truncated file");
  }

  const std::string& b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod<uint32_t>(ckpt.version);
  w.pod<uint64_t>(ckpt.seed);
  w.str(ckpt.config_text);
  w.pod<uint32_t>(static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& t : ckpt.params) {
    w.str(t.name);
    w.pod<uint8_t>(t.elem_bytes);
    w.shape(t.shape);
    w.values(t.values, t.elem_bytes);
  }
  w.pod<uint8_t>(ckpt.state ? 1 : 0);
  if (ckpt.state) {
    const TrainState& s = *ckpt.state;
    w.pod<int64_t>(s.step);
    w.pod<int64_t>(s.epoch);
    w.pod<int64_t>(s.adam_t);
    w.str(s.rng_state);
    w.pod<uint32_t>(static_cast<uint32_t>(s.moments.size()));
    for (const auto& m : s.moments) {
      w.str(m.name);
      w.pod<uint8_t>(m.elem_bytes);
      w.shape(m.shape);
      w.values(m.m, m.elem_bytes);
      w.values(m.v, m.elem_bytes);
    }
  }
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  r.expect_magic();
  Checkpoint ckpt;
  ckpt.version = r.pod<uint32_t>();
  if (ckpt.version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(ckpt.version));
  }
  ckpt.seed = r.pod<uint64_t>();
  ckpt.config_text = r.str();
  const auto count = r.pod<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.str();
    t.elem_bytes = r.elem_bytes();
    t.shape = r.shape();
    t.values = r.values(t.shape.numel(), t.elem_bytes);
    ckpt.params.push_back(std::move(t));
  }
  if (r.pod<uint8_t>() != 0) {
    TrainState s;
    s.step = r.pod<int64_t>();
    s.epoch = r.pod<int64_t>();
    s.adam_t = r.pod<int64_t>();
    s.rng_state = r.str();
    const auto n = r.pod<uint32_t>();
    for (uint32_t i = 0; i < n; ++i) {
      StoredMoments m;
      m.name = r.str();
      m.elem_bytes = r.elem_bytes();
      m.shape = r.shape();
      m.m = r.values(m.shape.numel(), m.elem_bytes);
      m.v = r.values(m.shape.numel(), m.elem_bytes);
      s.moments.push_back(std::move(m));
    }
    ckpt.state = std::move(s);
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  // Write to a sibling and rename so a failed write never clobbers the
  // previous checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw IoError("write failed for " + tmp.string() + " (disk full?)");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str(), path.string());
}

template <typename T>
StoredTensor store_tensor(const std::string& name, const Tensor4<T>& t) {
  StoredTensor s;
  s.name = name;
  s.shape = t.shape();
  s.elem_bytes = sizeof(T) == 4 ? 4 : 8;
  s.values.assign(t.data().begin(), t.data().end());
  return s;
}

template <typename T>
Tensor4<T> restore_tensor(const StoredTensor& s) {
  std::vector<T> v(s.values.begin(), s.values.end());
  return Tensor4<T>(s.shape, std::move(v));
}

template <typename T>
std::vector<StoredTensor> store_parameters(const ParameterList<T>& params) {
  std::vector<StoredTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(store_tensor(p.name, p.var.value()));
  return out;
}

template <typename T>
void restore_parameters(const std::vector<StoredTensor>& stored, ParameterList<T>& params) {
  std::map<std::string, const StoredTensor*> by_name;
  for (const auto& s : stored) by_name[s.name] = &s;
  std::vector<std::string> diffs;
  for (const auto& p : params) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      diffs.push_back("missing " + p.name + " " + p.var.shape().str());
    } else if (it->second->shape != p.var.shape()) {
      diffs.push_back("shape " + p.name + ": checkpoint " + it->second->shape.str() + " vs model " +
                      p.var.shape().str());
    }
  }
  for (const auto& s : stored) {
    const bool known = std::any_of(params.begin(), params.end(),
                                   [&](const auto& p) { return p.name == s.name; });
    if (!known) diffs.push_back("unexpected " + s.name + " " + s.shape.str());
  }
  if (!diffs.empty()) {
    std::string msg = "checkpoint does not match the model:";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw ConfigError(msg);
  }
  for (auto& p : params) {
    Var<T> v = p.var;
    v.mutable_value() = restore_tensor<T>(*by_name.at(p.name));
  }
}

#define CAPSR_INSTANTIATE_CHECKPOINT(T)                                                     \
  template StoredTensor store_tensor(const std::string&, const Tensor4<T>&);                \
  template Tensor4<T> restore_tensor(const StoredTensor&);                                  \
  template std::vector<StoredTensor> store_parameters(const ParameterList<T>&);             \
  template void restore_parameters(const std::vector<StoredTensor>&, ParameterList<T>&);

CAPSR_INSTANTIATE_CHECKPOINT(float)
CAPSR_INSTANTIATE_CHECKPOINT(double)

}  // namespace capsr
