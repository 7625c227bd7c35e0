// Copyright 2026 The distclip Authors. All Rights Reserved.
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

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "distclip/core/error.hpp"
#include "distclip/train/trainer.hpp"

// Layout (all integers little-endian):
//   magic "DCLPCKPT" | u32 version | u32 section count
//   per section: u16 name length | name | u64 offset | u64 size
//   section payloads, at the recorded absolute offsets
// Sections: "config" (JSON), "state" (u64 step, u64 adam step, f64 lambda,
// f64 tau_t, f64 center momentum), "student", "teacher", "center",
// "adam_m", "adam_v" (tensor trees of f32).
// Tensor tree: u32 count, then per tensor u16 name length | name | u8 rank |
// u64 dims[rank] | f32 data[numel].

namespace distclip {

inline constexpr std::string_view kCheckpointMagic = "DCLPCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
void put(std::string& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  out.append(bytes, sizeof(U));
}

inline void put_name(std::string& out, const std::string& name) {
  put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
}

inline std::string encode_tree(const ParamTree<float>& tree) {
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tree.size()));
  for (const auto& [name, t] : tree) {
    put_name(out, name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (float v : t.data()) put<float>(out, v);
  }
  return out;
}

/// Bounds-checked little-endian reader over an in-memory file.
class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    char bytes[sizeof(U)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    pos_ += sizeof(U);
    U value;
    std::memcpy(&value, bytes, sizeof(U));
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string get_name() { return get_string(get<std::uint16_t>()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CheckpointTruncatedError(what_ + ": unexpected end of data");
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline ParamTree<float> decode_tree(std::string_view bytes, const std::string& what) {
  Reader r(bytes, what);
  ParamTree<float> tree;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_name();
    const auto rank = r.get<std::uint8_t>();
    if (rank > Tensor<float>::kMaxRank) {
      throw CheckpointShapeError(what + ": tensor '" + name + "' has rank " + std::to_string(rank));
    }
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.get<std::uint64_t>());
      numel *= d;
    }
    std::vector<float> values(numel);
    for (float& v : values) v = r.get<float>();
    tree.emplace(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw CheckpointShapeError(what + ": trailing bytes");
  return tree;
}

/// Every tensor must exist with the shape the config implies.
inline void check_tree(const ParamTree<float>& tree, const ParamTree<float>& expected,
                       const std::string& what) {
  for (const auto& [name, t] : expected) {
    auto it = tree.find(name);
    if (it == tree.end()) throw CheckpointShapeError(what + ": missing tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw CheckpointShapeError(what + ": tensor '" + name + "' has shape " +
                                 shape_to_string(it->second.shape()) + ", config implies " +
                                 shape_to_string(t.shape()));
    }
  }
  if (tree.size() != expected.size()) {
    throw CheckpointShapeError(what + ": " + std::to_string(tree.size()) + " tensors, expected " +
                               std::to_string(expected.size()));
  }
}

}  // namespace ckpt

inline std::string serialize_checkpoint(const TrainState<float>& s) {
  std::vector<std::pair<std::string, std::string>> sections;
  sections.emplace_back("config", nlohmann::json(s.config).dump());
  std::string state;
  ckpt::put<std::uint64_t>(state, s.step);
  ckpt::put<std::uint64_t>(state, s.moments.step);
  ckpt::put<double>(state, s.teacher.lambda);
  ckpt::put<double>(state, s.teacher.tau_t);
  ckpt::put<double>(state, s.teacher.center_momentum);
  sections.emplace_back("state", std::move(state));
  sections.emplace_back("student", ckpt::encode_tree(s.student.tensors));
  sections.emplace_back("teacher", ckpt::encode_tree(s.teacher.params.tensors));
  sections.emplace_back("center", ckpt::encode_tree({{"center", s.teacher.center}}));
  sections.emplace_back("adam_m", ckpt::encode_tree(s.moments.m));
  sections.emplace_back("adam_v", ckpt::encode_tree(s.moments.v));

  std::string header(kCheckpointMagic);
  ckpt::put<std::uint32_t>(header, kCheckpointVersion);
  ckpt::put<std::uint32_t>(header, static_cast<std::uint32_t>(sections.size()));
  std::size_t table = 0;
  for (const auto& [name, _] : sections) table += 2 + name.size() + 16;
  std::uint64_t offset = header.size() + table;
  for (const auto& [name, payload] : sections) {
    ckpt::put_name(header, name);
    ckpt::put<std::uint64_t>(header, offset);
    ckpt::put<std::uint64_t>(header, payload.size());
    offset += payload.size();
  }
  for (const auto& [_, payload] : sections) header += payload;
  return header;
}

inline TrainState<float> deserialize_checkpoint(std::string_view bytes,
                                                const std::string& what = "checkpoint") {
  ckpt::Reader r(bytes, what);
  if (r.get_string(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw IoError(what + ": not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError(what + ": format version " + std::to_string(version) +
                                 ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, std::string_view> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_name();
    const auto offset = r.get<std::uint64_t>();
    const auto size = r.get<std::uint64_t>();
    if (offset > bytes.size() || size > bytes.size() - offset) {
      throw CheckpointTruncatedError(what + ": section '" + name + "' extends past end of file");
    }
    sections.emplace(std::move(name), bytes.substr(offset, size));
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    if (it == sections.end()) throw IoError(what + ": missing section '" + name + "'");
    return it->second;
  };

  TrainState<float> s;
  try {
    s.config = nlohmann::json::parse(section("config")).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(what + ": unreadable config section: " + e.what());
  }
  ckpt::Reader st(section("state"), what + " state");
  s.step = st.get<std::uint64_t>();
  s.moments.step = st.get<std::uint64_t>();
  s.teacher.lambda = st.get<double>();
  s.teacher.tau_t = st.get<double>();
  s.teacher.center_momentum = st.get<double>();

  const ParamTree<float> expected = init_model<float>(s.config.model, 0).tensors;
  s.student = {s.config.model, ckpt::decode_tree(section("student"), what + " student")};
  ckpt::check_tree(s.student.tensors, expected, what + " student");
  s.teacher.params = {s.config.model, ckpt::decode_tree(section("teacher"), what + " teacher")};
  ckpt::check_tree(s.teacher.params.tensors, expected, what + " teacher");
  s.moments.m = ckpt::decode_tree(section("adam_m"), what + " adam_m");
  ckpt::check_tree(s.moments.m, expected, what + " adam_m");
  s.moments.v = ckpt::decode_tree(section("adam_v"), what + " adam_v");
  ckpt::check_tree(s.moments.v, expected, what + " adam_v");
  const ParamTree<float> center = ckpt::decode_tree(section("center"), what + " center");
  ckpt::check_tree(center, {{"center", Tensor<float>(Shape{s.config.model.dino.output_dim})}},
                   what + " center");
  s.teacher.center = center.at("center");
  return s;
}

/// Writes atomically: a temporary file is renamed over the target.
inline void save_checkpoint(const TrainState<float>& state, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(state);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

inline TrainState<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

}  // namespace distclip
