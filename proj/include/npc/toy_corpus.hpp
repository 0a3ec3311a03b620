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

// Seeded synthetic speech stand-in. An utterance is a run of segments; each
// segment is a linear chirp in one of three bands, rising or falling, or a
// noise-only gap. Segment class is the frame label. Every "speaker" has its own
// frequency scale, harmonic balance and background hum.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "npc/config.hpp"
#include "npc/feature_io.hpp"
#include "npc/features.hpp"
#include "npc/rng.hpp"

namespace npc {

inline constexpr int kToyBands = 3;
inline constexpr int kToyClasses = 2 * kToyBands + 1;  // last class = gap
inline constexpr double kToyBandEdges[kToyBands][2] = {{250.0, 600.0}, {800.0, 1600.0}, {2000.0, 3600.0}};

struct ToyCorpusConfig {
  int utterances = 200;
  int speakers = 10;
  int sample_rate = 16000;
  double min_seconds = 1.0;
  double max_seconds = 1.5;
  int min_segment_frames = 10;  // in 10 ms hops
  int max_segment_frames = 25;
  double noise_std = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    require(utterances >= 1 && speakers >= 1 && sample_rate > 0, ErrorCode::kConfig, "toy corpus sizes must be positive");
    require(min_seconds > 0.05 && max_seconds >= min_seconds, ErrorCode::kConfig, "toy corpus durations");
    require(min_segment_frames >= 1 && max_segment_frames >= min_segment_frames, ErrorCode::kConfig,
            "toy corpus segment lengths");
    require(noise_std >= 0, ErrorCode::kConfig, "noise_std must be >= 0");
  }
};

inline KeyValues to_key_values(const ToyCorpusConfig& c) {
  return {{"toy_utterances", std::to_string(c.utterances)},
          {"toy_speakers", std::to_string(c.speakers)},
          {"toy_sample_rate", std::to_string(c.sample_rate)},
          {"toy_min_seconds", format_number(c.min_seconds)},
          {"toy_max_seconds", format_number(c.max_seconds)},
          {"toy_min_segment_frames", std::to_string(c.min_segment_frames)},
          {"toy_max_segment_frames", std::to_string(c.max_segment_frames)},
          {"toy_noise_std", format_number(c.noise_std)},
          {"toy_seed", std::to_string(c.seed)}};
}

inline ToyCorpusConfig toy_config_from(const KeyValues& kv, ToyCorpusConfig c = {}) {
  ConfigReader r(kv);
  c.utterances = static_cast<int>(r.get_int("toy_utterances", c.utterances));
  c.speakers = static_cast<int>(r.get_int("toy_speakers", c.speakers));
  c.sample_rate = static_cast<int>(r.get_int("toy_sample_rate", c.sample_rate));
  c.min_seconds = r.get_double("toy_min_seconds", c.min_seconds);
  c.max_seconds = r.get_double("toy_max_seconds", c.max_seconds);
  c.min_segment_frames = static_cast<int>(r.get_int("toy_min_segment_frames", c.min_segment_frames));
  c.max_segment_frames = static_cast<int>(r.get_int("toy_max_segment_frames", c.max_segment_frames));
  c.noise_std = r.get_double("toy_noise_std", c.noise_std);
  c.seed = static_cast<std::uint64_t>(r.get_int("toy_seed", static_cast<long long>(c.seed)));
  return c;
}

struct ToySpeaker {
  double freq_scale = 1.0;
  double second_harmonic = 0.5;
  double hum_hz = 150.0;
  double hum_amp = 0.1;
};

struct ToyUtterance {
  std::string id;
  int speaker = 0;
  AudioSignal audio;
  std::vector<int> sample_class;  // class of every sample

  /// Class at the center sample of each analysis frame.
  std::vector<int> frame_labels(const FrameParams& params) const {
    const int win = params.window_samples(audio.sample_rate);
    const int hop = params.hop_samples(audio.sample_rate);
    const std::size_t T = num_frames_for(audio.samples.size(), win, hop);
    std::vector<int> out(T);
    for (std::size_t t = 0; t < T; ++t) {
      out[t] = sample_class[t * static_cast<std::size_t>(hop) + static_cast<std::size_t>(win / 2)];
    }
    return out;
  }
};

inline std::vector<ToySpeaker> toy_speakers(const ToyCorpusConfig& cfg) {
  Rng rng = Rng(cfg.seed).fork(1);
  std::vector<ToySpeaker> out(static_cast<std::size_t>(cfg.speakers));
  for (auto& s : out) {
    s.freq_scale = rng.uniform(0.92, 1.08);
    s.second_harmonic = rng.uniform(0.1, 0.8);
    s.hum_hz = rng.uniform(90.0, 220.0);
    s.hum_amp = rng.uniform(0.02, 0.2);
  }
  return out;
}

inline std::vector<ToyUtterance> generate_toy_corpus(const ToyCorpusConfig& cfg) {
  cfg.validate();
  const auto speakers = toy_speakers(cfg);
  const double sr = cfg.sample_rate;
  const std::size_t hop = static_cast<std::size_t>(std::lround(0.010 * sr));
  std::vector<ToyUtterance> out;
  out.reserve(static_cast<std::size_t>(cfg.utterances));
  for (int u = 0; u < cfg.utterances; ++u) {
    Rng rng = Rng(cfg.seed).fork(100 + static_cast<std::uint64_t>(u));
    ToyUtterance utt;
    utt.speaker = u % cfg.speakers;
    const ToySpeaker& spk = speakers[static_cast<std::size_t>(utt.speaker)];
    char id[32];
    std::snprintf(id, sizeof(id), "toy%04d", u);
    utt.id = id;
    utt.audio.sample_rate = cfg.sample_rate;
    const auto n = static_cast<std::size_t>(std::lround(rng.uniform(cfg.min_seconds, cfg.max_seconds) * sr));
    utt.audio.samples.assign(n, 0.0);
    utt.sample_class.assign(n, kToyClasses - 1);

    double phase = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
      const int cls = static_cast<int>(rng.index(kToyClasses));
      const std::size_t frames =
          static_cast<std::size_t>(cfg.min_segment_frames) +
          rng.index(static_cast<std::size_t>(cfg.max_segment_frames - cfg.min_segment_frames + 1));
      const std::size_t len = std::min(n - pos, frames * hop);
      const double amp = rng.uniform(0.2, 0.4);
      if (cls < kToyClasses - 1) {
        const int band = cls / 2;
        const bool rising = cls % 2 == 0;
        const double lo = kToyBandEdges[band][0] * spk.freq_scale;
        const double hi = kToyBandEdges[band][1] * spk.freq_scale;
        const double ramp = 0.005 * sr;
        for (std::size_t i = 0; i < len; ++i) {
          const double frac = static_cast<double>(i) / static_cast<double>(len);
          const double f = rising ? lo + (hi - lo) * frac : hi - (hi - lo) * frac;
          phase += 2.0 * M_PI * f / sr;
          const double edge = std::min({1.0, (i + 1) / ramp, (len - i) / ramp});
          utt.audio.samples[pos + i] = amp * edge * (std::sin(phase) + spk.second_harmonic * std::sin(2.0 * phase));
        }
      }
      for (std::size_t i = 0; i < len; ++i) utt.sample_class[pos + i] = cls;
      pos += len;
    }
    for (std::size_t i = 0; i < n; ++i) {
      utt.audio.samples[i] += spk.hum_amp * std::sin(2.0 * M_PI * spk.hum_hz * i / sr) + cfg.noise_std * rng.normal();
      utt.audio.samples[i] = std::clamp(utt.audio.samples[i], -1.0, 32767.0 / 32768.0);
    }
    out.push_back(std::move(utt));
  }
  return out;
}

/// Writes wav/, labels/ and manifest.tsv under dir; returns the manifest path.
inline std::filesystem::path write_toy_corpus(const std::vector<ToyUtterance>& corpus, const std::filesystem::path& dir,
                                              const FrameParams& params) {
  std::filesystem::create_directories(dir / "wav");
  std::filesystem::create_directories(dir / "labels");
  std::string manifest = "utterance_id\twav_path\tspeaker_id\tlabel_path\n";
  for (const auto& u : corpus) {
    write_wav(dir / "wav" / (u.id + ".wav"), u.audio);
    write_frame_labels(dir / "labels" / (u.id + ".lab"), u.frame_labels(params));
    char spk[32];
    std::snprintf(spk, sizeof(spk), "spk%02d", u.speaker);
    manifest += u.id + "\twav/" + u.id + ".wav\t" + spk + "\tlabels/" + u.id + ".lab\n";
  }
  detail::write_file_bytes(dir / "manifest.tsv", manifest);
  return dir / "manifest.tsv";
}

}  // namespace npc
