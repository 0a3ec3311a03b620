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

// Surface features: 16-bit PCM WAV ingestion, log-Mel spectrogram, and
// per-utterance / per-speaker mean-variance normalization.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "npc/common.hpp"

namespace npc {

struct AudioSignal {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = 16000;
};

struct FrameParams {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 80;
  int fft_size = 0;  // 0 picks the smallest power of two >= window length

  int window_samples(int sample_rate) const {
    return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
  }
  int hop_samples(int sample_rate) const { return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0)); }
  int resolved_fft_size(int sample_rate) const {
    const int window = window_samples(sample_rate);
    if (fft_size > 0) return fft_size;
    int n = 1;
    while (n < window) n <<= 1;
    return n;
  }

  void validate(int sample_rate) const {
    require(hop_ms > 0.0 && hop_ms <= window_ms, ErrorCode::kInvalidArgument, "need 0 < hop_ms <= window_ms");
    require(n_mels >= 1, ErrorCode::kInvalidArgument, "n_mels must be >= 1");
    require(hop_samples(sample_rate) >= 1, ErrorCode::kInvalidArgument, "hop shorter than one sample");
    const int n = resolved_fft_size(sample_rate);
    require(n >= window_samples(sample_rate) && (n & (n - 1)) == 0, ErrorCode::kInvalidArgument,
            "fft_size must be a power of two >= window length");
  }
};

struct FeatureSequence {
  Mat<float> frames;  // T x d_in
  std::string utterance_id;

  std::size_t num_frames() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(frames.cols()); }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kData, "write failed: " + path.string());
}

}  // namespace detail

/// Reads a PCM 16-bit mono WAV file; samples are scaled by 1/32768.
inline AudioSignal load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kFileNotFound, path.string());
  const std::string bytes = detail::read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  require(n >= 12 && std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
          ErrorCode::kMalformedFile, "not a RIFF/WAVE file: " + path.string());

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = detail::read_u32le(p + pos + 4);
    const std::size_t body = pos + 8;
    require(body + size <= n, ErrorCode::kMalformedFile, "truncated chunk in " + path.string());
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      require(size >= 16, ErrorCode::kMalformedFile, "short fmt chunk");
      const std::uint16_t format = detail::read_u16le(p + body);
      channels = detail::read_u16le(p + body + 2);
      rate = detail::read_u32le(p + body + 4);
      bits = detail::read_u16le(p + body + 14);
      if (format != 1) throw Error(ErrorCode::kUnsupportedEncoding, "format tag " + std::to_string(format));
      if (channels != 1) throw Error(ErrorCode::kNotMono, std::to_string(channels) + " channels");
      if (bits != 16) throw Error(ErrorCode::kUnsupportedEncoding, std::to_string(bits) + "-bit samples");
      require(rate > 0, ErrorCode::kMalformedFile, "zero sample rate");
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      require(have_fmt, ErrorCode::kMalformedFile, "data chunk before fmt chunk");
      AudioSignal signal;
      signal.sample_rate = static_cast<int>(rate);
      signal.samples.resize(size / 2);
      for (std::size_t i = 0; i < signal.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(detail::read_u16le(p + body + 2 * i));
        signal.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      require(!signal.samples.empty(), ErrorCode::kMalformedFile, "empty data chunk");
      return signal;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(ErrorCode::kMalformedFile, "no data chunk in " + path.string());
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  out.append("RIFF");
  detail::put_u32le(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);
  detail::put_u16le(out, 1);
  detail::put_u32le(out, static_cast<std::uint32_t>(signal.sample_rate));
  detail::put_u32le(out, static_cast<std::uint32_t>(signal.sample_rate * 2));
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  out.append("data");
  detail::put_u32le(out, data_bytes);
  for (double s : signal.samples) {
    const double v = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  detail::write_file_bytes(path, out);
}

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Center frequency (Hz) of each triangular filter spanning [0, sample_rate/2].
inline std::vector<double> mel_center_frequencies(int n_mels, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int j = 0; j < n_mels; ++j) centers[j] = mel_to_hz(top * (j + 1) / (n_mels + 1));
  return centers;
}

/// n_mels x (fft_size/2 + 1) triangular filterbank applied to the power spectrum.
inline Mat<double> mel_filterbank(int n_mels, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int j = 0; j < n_mels + 2; ++j) edges[j] = mel_to_hz(top * j / (n_mels + 1));
  Mat<double> fb = Mat<double>::Zero(n_mels, bins);
  for (int j = 0; j < n_mels; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > lo && f < hi) fb(j, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

inline constexpr double kLogMelFloor = 1e-10;

inline std::size_t num_frames_for(std::size_t num_samples, int window, int hop) {
  if (num_samples < static_cast<std::size_t>(window)) return 0;
  return (num_samples - window) / hop + 1;
}

/// Natural-log Mel energies, Hann window, no pre-emphasis or dither.
inline FeatureSequence log_mel(const AudioSignal& signal, const FrameParams& params, std::string utterance_id = {}) {
  require(signal.sample_rate > 0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  params.validate(signal.sample_rate);
  const int window = params.window_samples(signal.sample_rate);
  const int hop = params.hop_samples(signal.sample_rate);
  const int nfft = params.resolved_fft_size(signal.sample_rate);
  const std::size_t frames = num_frames_for(signal.samples.size(), window, hop);
  if (frames == 0) {
    throw Error(ErrorCode::kSignalTooShort, std::to_string(signal.samples.size()) + " samples < window of " +
                                                std::to_string(window));
  }

  const Mat<double> fb = mel_filterbank(params.n_mels, nfft, signal.sample_rate);
  std::vector<double> hann(window);
  for (int i = 0; i < window; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / window);

  const int bins = nfft / 2 + 1;
  double* in = fftw_alloc_real(nfft);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    // Only fftw_execute is thread-safe.
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(nfft, in, out, FFTW_ESTIMATE);
  }

  FeatureSequence feat;
  feat.utterance_id = std::move(utterance_id);
  feat.frames.resize(static_cast<Eigen::Index>(frames), params.n_mels);
  Eigen::VectorXd power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (int i = 0; i < nfft; ++i) in[i] = i < window ? signal.samples[start + i] * hann[i] : 0.0;
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const Eigen::VectorXd energies = fb * power;
    for (int j = 0; j < params.n_mels; ++j) {
      feat.frames(static_cast<Eigen::Index>(t), j) = static_cast<float>(std::log(energies[j] + kLogMelFloor));
    }
  }

  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return feat;
}

enum class NormMode { kUtterance, kSpeaker };

struct ChannelStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;
};

inline constexpr double kDegenerateStd = 1e-8;

/// Pools all frames of the given sequences; population variance.
inline ChannelStats compute_channel_stats(const std::vector<const FeatureSequence*>& seqs) {
  require(!seqs.empty(), ErrorCode::kInvalidArgument, "no sequences for statistics");
  const Eigen::Index d = seqs.front()->frames.cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
  double count = 0;
  for (const auto* s : seqs) {
    require(s->frames.cols() == d, ErrorCode::kShapeMismatch, "feature dims differ");
    for (Eigen::Index t = 0; t < s->frames.rows(); ++t) {
      for (Eigen::Index c = 0; c < d; ++c) sum[c] += s->frames(t, c);
    }
    count += static_cast<double>(s->frames.rows());
  }
  require(count > 0, ErrorCode::kInvalidArgument, "no frames for statistics");
  ChannelStats stats;
  stats.mean = sum / count;
  for (const auto* s : seqs) {
    for (Eigen::Index t = 0; t < s->frames.rows(); ++t) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const double dev = s->frames(t, c) - stats.mean[c];
        sq[c] += dev * dev;
      }
    }
  }
  stats.std = (sq / count).cwiseSqrt();
  return stats;
}

/// Maps each channel to zero mean / unit population variance within the scope;
/// channels with std below 1e-8 become all zeros.
inline FeatureSequence normalize(const FeatureSequence& feat, NormMode mode,
                                 const std::optional<ChannelStats>& speaker_stats = std::nullopt) {
  require(feat.frames.rows() >= 1, ErrorCode::kInvalidArgument, "empty feature sequence");
  ChannelStats stats;
  if (mode == NormMode::kUtterance) {
    stats = compute_channel_stats({&feat});
  } else {
    if (!speaker_stats) throw Error(ErrorCode::kMissingSpeakerStats, "speaker normalization for " + feat.utterance_id);
    require(speaker_stats->mean.size() == feat.frames.cols() && speaker_stats->std.size() == feat.frames.cols(),
            ErrorCode::kShapeMismatch, "speaker stats dimension");
    stats = *speaker_stats;
  }
  FeatureSequence out;
  out.utterance_id = feat.utterance_id;
  out.frames.resize(feat.frames.rows(), feat.frames.cols());
  for (Eigen::Index c = 0; c < feat.frames.cols(); ++c) {
    const bool degenerate = stats.std[c] < kDegenerateStd;
    for (Eigen::Index t = 0; t < feat.frames.rows(); ++t) {
      out.frames(t, c) =
          degenerate ? 0.0f : static_cast<float>((feat.frames(t, c) - stats.mean[c]) / stats.std[c]);
    }
  }
  return out;
}

}  // namespace npc
