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

#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "npc/common.hpp"
#include "npc/features.hpp"

namespace npc {

// NPCF feature file:
//   "NPCF" | u32 version=1 | u32 T | u32 d | T*d little-endian float32, row-major
inline constexpr std::uint32_t kFeatureFileVersion = 1;

namespace detail {

inline void put_f32le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32le(out, bits);
}

inline float read_f32le(const unsigned char* p) {
  const std::uint32_t bits = read_u32le(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

inline std::string encode_feature_file(const Mat<float>& frames) {
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(frames.size()) * 4);
  out.append("NPCF");
  detail::put_u32le(out, kFeatureFileVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(frames.rows()));
  detail::put_u32le(out, static_cast<std::uint32_t>(frames.cols()));
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) detail::put_f32le(out, frames(t, c));
  }
  return out;
}

inline void write_feature_file(const std::filesystem::path& path, const Mat<float>& frames) {
  detail::write_file_bytes(path, encode_feature_file(frames));
}

inline Mat<float> decode_feature_file(const std::string& bytes, const std::string& origin = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(p, "NPCF", 4) != 0) throw Error(ErrorCode::kBadMagic, origin);
  const std::uint32_t version = detail::read_u32le(p + 4);
  if (version != kFeatureFileVersion) {
    throw Error(ErrorCode::kVersionMismatch, origin + ": version " + std::to_string(version));
  }
  const std::uint32_t rows = detail::read_u32le(p + 8);
  const std::uint32_t cols = detail::read_u32le(p + 12);
  const std::size_t expected = 16 + static_cast<std::size_t>(rows) * cols * 4;
  require(bytes.size() == expected, ErrorCode::kMalformedFile, origin + ": size does not match header");
  Mat<float> frames(rows, cols);
  const unsigned char* q = p + 16;
  for (std::uint32_t t = 0; t < rows; ++t) {
    for (std::uint32_t c = 0; c < cols; ++c, q += 4) frames(t, c) = detail::read_f32le(q);
  }
  return frames;
}

inline Mat<float> read_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(detail::read_file_bytes(path), path.string());
}

/// One manifest row: utterance_id, wav_path, speaker_id, optional frame-label path.
struct ManifestEntry {
  std::string utterance_id;
  std::filesystem::path wav_path;
  std::string speaker_id;
  std::filesystem::path label_path;  // empty when absent
};

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

/// Relative paths are resolved against the manifest's directory. A first row
/// starting with "utterance_id" is treated as a header.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() || base.empty() ? fp : base / fp;
  };
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("utterance_id", 0) == 0) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw Error(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(lineno) + ": expected 3 or 4 columns");
    }
    ManifestEntry e;
    e.utterance_id = fields[0];
    e.wav_path = resolve(fields[1]);
    e.speaker_id = fields[2];
    if (fields.size() == 4 && !fields[3].empty()) e.label_path = resolve(fields[3]);
    entries.push_back(std::move(e));
  }
  require(!entries.empty(), ErrorCode::kData, "manifest " + path.string() + " has no entries");
  return entries;
}

/// Frame labels: one non-negative integer per line, one line per frame.
inline std::vector<int> read_frame_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "labels " + path.string());
  std::vector<int> labels;
  int v;
  while (in >> v) {
    require(v >= 0, ErrorCode::kMalformedFile, "negative label in " + path.string());
    labels.push_back(v);
  }
  require(in.eof(), ErrorCode::kMalformedFile, "non-integer label in " + path.string());
  return labels;
}

inline void write_frame_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ostringstream out;
  for (int v : labels) out << v << '\n';
  detail::write_file_bytes(path, out.str());
}

}  // namespace npc
