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

// Manifest -> normalized log-Mel corpus -> representations -> probe inputs.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "npc/feature_io.hpp"
#include "npc/features.hpp"
#include "npc/model.hpp"
#include "npc/probe.hpp"

namespace npc {

struct CorpusUtterance {
  std::string id;
  std::string speaker;
  Mat<float> features;      // normalized log-Mel, T x n_mels
  std::vector<int> labels;  // per-frame classes; empty without a label file
};

inline NormMode parse_norm_mode(const std::string& s) {
  if (s == "speaker") return NormMode::kSpeaker;
  if (s == "utterance") return NormMode::kUtterance;
  throw Error(ErrorCode::kConfig, "norm must be 'speaker' or 'utterance', got '" + s + "'");
}

/// Speaker statistics pool every utterance of that speaker in the manifest.
inline std::vector<CorpusUtterance> load_corpus(const std::filesystem::path& manifest, const FrameParams& params,
                                                NormMode norm) {
  const auto entries = read_manifest(manifest);
  std::vector<FeatureSequence> raw;
  raw.reserve(entries.size());
  for (const auto& e : entries) raw.push_back(log_mel(load_wav(e.wav_path), params, e.utterance_id));

  std::map<std::string, ChannelStats> stats;
  if (norm == NormMode::kSpeaker) {
    std::map<std::string, std::vector<const FeatureSequence*>> by_speaker;
    for (std::size_t i = 0; i < entries.size(); ++i) by_speaker[entries[i].speaker_id].push_back(&raw[i]);
    for (const auto& [spk, seqs] : by_speaker) stats[spk] = compute_channel_stats(seqs);
  }

  std::vector<CorpusUtterance> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    CorpusUtterance u;
    u.id = e.utterance_id;
    u.speaker = e.speaker_id;
    u.features = norm == NormMode::kSpeaker ? normalize(raw[i], norm, stats.at(e.speaker_id)).frames
                                            : normalize(raw[i], norm).frames;
    if (!e.label_path.empty()) {
      u.labels = read_frame_labels(e.label_path);
      require(u.labels.size() == static_cast<std::size_t>(u.features.rows()), ErrorCode::kData,
              e.label_path.string() + ": " + std::to_string(u.labels.size()) + " labels for " +
                  std::to_string(u.features.rows()) + " frames");
    }
    out.push_back(std::move(u));
  }
  return out;
}

inline std::vector<Mat<float>> corpus_features(const std::vector<CorpusUtterance>& corpus) {
  std::vector<Mat<float>> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) out.push_back(u.features);
  return out;
}

/// h for every utterance, one sequence at a time.
inline std::vector<Mat<float>> extract_representations(const NpcModel<float>& model,
                                                       const std::vector<CorpusUtterance>& corpus) {
  std::vector<Mat<float>> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) {
    require(u.features.cols() == model.config.input_dim, ErrorCode::kShapeMismatch,
            "utterance " + u.id + " has " + std::to_string(u.features.cols()) + " channels, checkpoint expects " +
                std::to_string(model.config.input_dim));
    out.push_back(model.encode(u.features));
  }
  return out;
}

/// Speakers are numbered in sorted id order.
inline std::vector<LabeledUtterance> probe_inputs(const std::vector<CorpusUtterance>& corpus,
                                                  const std::vector<Mat<float>>& reps) {
  require(corpus.size() == reps.size(), ErrorCode::kShapeMismatch, "one representation per utterance");
  std::map<std::string, int> speaker_ids;
  for (const auto& u : corpus) speaker_ids.emplace(u.speaker, 0);
  int next = 0;
  for (auto& [spk, id] : speaker_ids) id = next++;
  std::vector<LabeledUtterance> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back({reps[i], corpus[i].labels, speaker_ids.at(corpus[i].speaker)});
  }
  return out;
}

inline bool has_frame_labels(const std::vector<CorpusUtterance>& corpus) {
  for (const auto& u : corpus)
    if (u.labels.empty()) return false;
  return !corpus.empty();
}

}  // namespace npc
