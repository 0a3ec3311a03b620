// Copyright 2026 The NPC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint layout (all integers u32 little-endian):
//   "NPCK" | version | config_len | config (key=value lines, UTF-8)
//   | tensor_count | { name_len | name | rank | dims[rank] | float32 data }*
//   | crc32 of every preceding byte
// Masks are stored as float tensors "maskedN.mask" with values 0/1.

#pragma once

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <map>
#include <string>

#include "npc/config.hpp"
#include "npc/feature_io.hpp"
#include "npc/model.hpp"

namespace npc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline KeyValues to_key_values(const NpcConfig& c) {
  return {{"layers", std::to_string(c.layers)},
          {"receptive_field", std::to_string(c.receptive_field)},
          {"input_mask", std::to_string(c.input_mask)},
          {"dim", std::to_string(c.dim)},
          {"input_dim", std::to_string(c.input_dim)},
          {"vq_groups", std::to_string(c.vq_groups)},
          {"vq_codewords", std::to_string(c.vq_codewords)},
          {"vq_enabled", c.vq_enabled ? "1" : "0"},
          {"masked_conv_every_layer", c.masked_conv_every_layer ? "1" : "0"}};
}

inline NpcConfig npc_config_from(const KeyValues& kv, NpcConfig c = {}) {
  ConfigReader r(kv);
  c.layers = static_cast<int>(r.get_int("layers", c.layers));
  c.receptive_field = static_cast<int>(r.get_int("receptive_field", c.receptive_field));
  c.input_mask = static_cast<int>(r.get_int("input_mask", c.input_mask));
  c.dim = static_cast<int>(r.get_int("dim", c.dim));
  c.input_dim = static_cast<int>(r.get_int("input_dim", c.input_dim));
  c.vq_groups = static_cast<int>(r.get_int("vq_groups", c.vq_groups));
  c.vq_codewords = static_cast<int>(r.get_int("vq_codewords", c.vq_codewords));
  c.vq_enabled = r.get_bool("vq_enabled", c.vq_enabled);
  c.masked_conv_every_layer = r.get_bool("masked_conv_every_layer", c.masked_conv_every_layer);
  return c;
}

inline std::uint32_t crc32_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

/// Serializes float parameters and masks; `extra` keys are stored beside the
/// model config (model keys win on collision).
inline std::string encode_checkpoint(const NpcModel<float>& model, const KeyValues& extra = {}) {
  KeyValues kv = extra;
  for (const auto& [k, v] : to_key_values(model.config)) kv[k] = v;
  const std::string cfg = format_key_values(kv);

  std::vector<Tensor<float>> tensors;
  for (const auto* p : model.parameters()) tensors.push_back(*p);
  for (std::size_t l = 0; l < model.masked.size(); ++l) {
    if (!model.masked[l]) continue;
    const auto& mask = model.masked[l]->mask;
    Tensor<float> t("masked" + std::to_string(l + 1) + ".mask", {mask.size()});
    for (std::size_t i = 0; i < mask.size(); ++i) t.data(0, static_cast<Eigen::Index>(i)) = mask[i] ? 1.0f : 0.0f;
    tensors.push_back(std::move(t));
  }

  std::string out = "NPCK";
  detail::put_u32le(out, kCheckpointVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  detail::put_u32le(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put_u32le(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    detail::put_u32le(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u32le(out, static_cast<std::uint32_t>(d));
    for (Eigen::Index i = 0; i < t.data.size(); ++i) detail::put_f32le(out, t.data.data()[i]);
  }
  detail::put_u32le(out, crc32_of(out, out.size()));
  return out;
}

inline void save_checkpoint(const NpcModel<float>& model, const std::filesystem::path& path,
                            const KeyValues& extra = {}) {
  detail::write_file_bytes(path, encode_checkpoint(model, extra));
}

struct LoadedCheckpoint {
  NpcModel<float> model;
  KeyValues config;
};

inline LoadedCheckpoint decode_checkpoint(const std::string& bytes, const std::string& origin = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(p, "NPCK", 4) != 0) throw Error(ErrorCode::kBadMagic, origin);
  require(bytes.size() >= 20, ErrorCode::kChecksumMismatch, origin + ": truncated");
  const std::uint32_t stored = detail::read_u32le(p + bytes.size() - 4);
  if (stored != crc32_of(bytes, bytes.size() - 4)) {
    throw Error(ErrorCode::kChecksumMismatch, origin + ": CRC32 does not match contents");
  }
  const std::uint32_t version = detail::read_u32le(p + 4);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, origin + ": version " + std::to_string(version) + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }

  const std::size_t end = bytes.size() - 4;
  std::size_t pos = 8;
  auto need = [&](std::size_t n) {
    require(pos + n <= end, ErrorCode::kMalformedFile, origin + ": truncated body");
  };
  auto u32 = [&]() {
    need(4);
    const auto v = detail::read_u32le(p + pos);
    pos += 4;
    return v;
  };

  const std::uint32_t cfg_len = u32();
  need(cfg_len);
  LoadedCheckpoint out;
  out.config = parse_key_values(bytes.substr(pos, cfg_len), origin);
  pos += cfg_len;
  const NpcConfig cfg = npc_config_from(out.config);
  out.model = NpcModel<float>::zeros(cfg);

  std::map<std::string, Tensor<float>*> slots;
  for (auto* t : out.model.parameters()) slots[t->name] = t;
  std::map<std::string, ops::TapMask*> masks;
  for (std::size_t l = 0; l < out.model.masked.size(); ++l) {
    if (out.model.masked[l]) masks["masked" + std::to_string(l + 1) + ".mask"] = &out.model.masked[l]->mask;
  }

  const std::uint32_t count = u32();
  std::size_t filled = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = u32();
    need(name_len);
    const std::string name = bytes.substr(pos, name_len);
    pos += name_len;
    const std::uint32_t rank = u32();
    std::vector<std::size_t> dims(rank);
    std::size_t numel = 1;
    for (auto& d : dims) {
      d = u32();
      numel *= d;
    }
    need(numel * 4);
    if (auto it = slots.find(name); it != slots.end()) {
      require(it->second->dims == dims, ErrorCode::kShapeMismatch, origin + ": dims of " + name);
      for (std::size_t j = 0; j < numel; ++j) it->second->data.data()[j] = detail::read_f32le(p + pos + 4 * j);
      ++filled;
    } else if (auto mt = masks.find(name); mt != masks.end()) {
      require(rank == 1 && dims[0] == mt->second->size(), ErrorCode::kShapeMismatch, origin + ": dims of " + name);
      for (std::size_t j = 0; j < numel; ++j) {
        const float v = detail::read_f32le(p + pos + 4 * j);
        require(v == 0.0f || v == 1.0f, ErrorCode::kMalformedFile, origin + ": mask " + name + " is not binary");
        (*mt->second)[j] = v == 1.0f ? 1 : 0;
      }
      ++filled;
    } else {
      throw Error(ErrorCode::kMalformedFile, origin + ": unexpected tensor " + name);
    }
    pos += numel * 4;
  }
  require(filled == slots.size() + masks.size(), ErrorCode::kMalformedFile, origin + ": missing tensors");
  require(pos == end, ErrorCode::kMalformedFile, origin + ": trailing bytes");
  return out;
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file_bytes(path), path.string());
}

}  // namespace npc
