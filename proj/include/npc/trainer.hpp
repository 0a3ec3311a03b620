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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "npc/adam.hpp"
#include "npc/checkpoint.hpp"
#include "npc/config.hpp"
#include "npc/graph.hpp"
#include "npc/model.hpp"
#include "npc/rng.hpp"

namespace npc {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double tau0 = 2.0;
  double tau_decay = 0.9995;
  double tau_floor = 0.5;
  int max_frames = 0;        // crop longer utterances to a seeded window; 0 = no crop
  int log_every = 1;         // steps between TrainLog records
  int checkpoint_every = 0;  // epochs between checkpoints written by the caller; 0 = final only
  double grad_clip = 0.0;    // global L2 norm; 0 = off
  bool log_wall_clock = false;

  void validate() const {
    require(epochs >= 1, ErrorCode::kConfig, "epochs must be >= 1");
    require(batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
    require(lr > 0, ErrorCode::kConfig, "lr must be > 0");
    require(tau0 > 0 && tau_floor > 0 && tau_decay > 0, ErrorCode::kConfig, "temperature parameters must be > 0");
    require(max_frames >= 0 && log_every >= 1 && checkpoint_every >= 0 && grad_clip >= 0, ErrorCode::kConfig,
            "invalid logging/cropping/clipping parameters");
  }
};

inline KeyValues to_key_values(const TrainConfig& c) {
  return {{"epochs", std::to_string(c.epochs)},
          {"batch_size", std::to_string(c.batch_size)},
          {"lr", format_number(c.lr)},
          {"seed", std::to_string(c.seed)},
          {"tau0", format_number(c.tau0)},
          {"tau_decay", format_number(c.tau_decay)},
          {"tau_floor", format_number(c.tau_floor)},
          {"max_frames", std::to_string(c.max_frames)},
          {"log_every", std::to_string(c.log_every)},
          {"checkpoint_every", std::to_string(c.checkpoint_every)},
          {"grad_clip", format_number(c.grad_clip)},
          {"log_wall_clock", c.log_wall_clock ? "1" : "0"}};
}

inline TrainConfig train_config_from(const KeyValues& kv, TrainConfig c = {}) {
  ConfigReader r(kv);
  c.epochs = static_cast<int>(r.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(r.get_int("batch_size", c.batch_size));
  c.lr = r.get_double("lr", c.lr);
  c.seed = static_cast<std::uint64_t>(r.get_int("seed", static_cast<long long>(c.seed)));
  c.tau0 = r.get_double("tau0", c.tau0);
  c.tau_decay = r.get_double("tau_decay", c.tau_decay);
  c.tau_floor = r.get_double("tau_floor", c.tau_floor);
  c.max_frames = static_cast<int>(r.get_int("max_frames", c.max_frames));
  c.log_every = static_cast<int>(r.get_int("log_every", c.log_every));
  c.checkpoint_every = static_cast<int>(r.get_int("checkpoint_every", c.checkpoint_every));
  c.grad_clip = r.get_double("grad_clip", c.grad_clip);
  c.log_wall_clock = r.get_bool("log_wall_clock", c.log_wall_clock);
  return c;
}

/// tau = max(floor, tau0 * decay^step).
inline double temperature(std::uint64_t step, const TrainConfig& c = {}) {
  return std::max(c.tau_floor, c.tau0 * std::pow(c.tau_decay, static_cast<double>(step)));
}

struct TrainRecord {
  std::uint64_t step = 0;
  int epoch = 0;
  double loss_sum = 0;
  double loss_per_frame = 0;
  double tau = 0;
  std::vector<double> perplexity;
  double wall_ms = 0;
};

struct TrainLog {
  std::size_t groups = 0;
  std::vector<TrainRecord> records;

  std::string to_csv() const {
    std::ostringstream out;
    out << "step,epoch,loss_sum,loss_per_frame,tau";
    for (std::size_t g = 1; g <= groups; ++g) out << ",perplexity_g" << g;
    out << ",wall_ms\n";
    for (const auto& r : records) {
      out << r.step << ',' << r.epoch << ',' << format_number(r.loss_sum) << ',' << format_number(r.loss_per_frame)
          << ',' << format_number(r.tau);
      for (double p : r.perplexity) out << ',' << format_number(p);
      out << ',' << format_number(r.wall_ms) << '\n';
    }
    return out.str();
  }
};

/// Padded batch: row b * max_len + t holds frame t of sequence b.
struct Batch {
  Mat<float> x;
  SeqLayout layout;
};

inline Batch make_batch(const std::vector<const Mat<float>*>& seqs) {
  require(!seqs.empty(), ErrorCode::kInvalidArgument, "empty batch");
  Batch out;
  out.layout.batch = seqs.size();
  for (const auto* s : seqs) {
    require(s->rows() >= 1, ErrorCode::kData, "empty utterance in batch");
    out.layout.lengths.push_back(static_cast<std::size_t>(s->rows()));
    out.layout.max_len = std::max(out.layout.max_len, static_cast<std::size_t>(s->rows()));
  }
  out.x = Mat<float>::Zero(static_cast<Eigen::Index>(out.layout.rows()), seqs.front()->cols());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    require(seqs[b]->cols() == out.x.cols(), ErrorCode::kShapeMismatch, "feature dims differ within batch");
    out.x.middleRows(static_cast<Eigen::Index>(out.layout.offset(b)), seqs[b]->rows()) = *seqs[b];
  }
  return out;
}

/// Hard VQ, no noise: the deterministic per-frame loss over a whole corpus.
inline double evaluate_loss(const NpcModel<float>& model, const std::vector<Mat<float>>& corpus) {
  double sum = 0;
  std::size_t frames = 0;
  for (const auto& x : corpus) {
    Eager<float> g;
    const auto f = npc_forward(g, model, x, SeqLayout::single(static_cast<std::size_t>(x.rows())), nullptr, 1.0f,
                               ops::VqMode::kStraightThrough);
    sum += static_cast<double>(f.loss.sum);
    frames += f.loss.frames;
  }
  return frames ? sum / static_cast<double>(frames) : 0.0;
}

struct TrainResult {
  TrainLog log;
  double initial_loss = 0;  // evaluate_loss before the first update
  double final_loss = 0;    // evaluate_loss after the last update
  std::uint64_t steps = 0;
};

/// Called after every epoch with the log so far.
using EpochCallback = std::function<void(int epoch, const NpcModel<float>& model, const TrainLog& log)>;

/// Self-supervised training. Data order, crops and Gumbel noise come from
/// independent streams forked off cfg.seed; parameter init is the caller's.
inline TrainResult train(NpcModel<float>& model, const std::vector<Mat<float>>& corpus, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}, const std::filesystem::path& diagnostic_dir = {}) {
  cfg.validate();
  require(!corpus.empty(), ErrorCode::kData, "training corpus is empty");
  for (const auto& x : corpus) {
    require(x.cols() == model.config.input_dim, ErrorCode::kShapeMismatch,
            "feature dim " + std::to_string(x.cols()) + " != model input_dim " + std::to_string(model.config.input_dim));
  }

  const Rng root(cfg.seed);
  Rng order_rng = root.fork(1);
  Rng crop_rng = root.fork(2);
  Rng noise_rng = root.fork(3);
  const auto groups = static_cast<std::size_t>(model.config.vq_groups);
  const auto codewords = static_cast<std::size_t>(model.config.vq_codewords);
  const auto vq_cols = static_cast<Eigen::Index>(groups * codewords);

  TrainResult res;
  res.log.groups = model.config.vq_enabled ? groups : 0;
  res.initial_loss = evaluate_loss(model, corpus);
  AdamState<float> adam;
  adam.lr = cfg.lr;
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Mat<float>> crops;
      std::vector<const Mat<float>*> seqs;
      for (std::size_t i = start; i < stop; ++i) {
        const Mat<float>& x = corpus[order[i]];
        if (cfg.max_frames > 0 && x.rows() > cfg.max_frames) {
          const auto off = static_cast<Eigen::Index>(crop_rng.index(static_cast<std::size_t>(x.rows() - cfg.max_frames) + 1));
          crops.emplace_back(x.middleRows(off, cfg.max_frames));
        }
      }
      std::size_t next_crop = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const Mat<float>& x = corpus[order[i]];
        seqs.push_back(cfg.max_frames > 0 && x.rows() > cfg.max_frames ? &crops[next_crop++] : &x);
      }
      const Batch batch = make_batch(seqs);
      const float tau = static_cast<float>(temperature(step, cfg));
      Mat<float> noise;
      if (model.config.vq_enabled) noise = sample_gumbel_noise<float>(batch.layout, vq_cols, noise_rng);

      Tape<float> tape;
      std::vector<Mat<float>> grads;
      NpcForward<Tape<float>> fwd;
      try {
        auto in = tape.input(batch.x);
        fwd = npc_forward(tape, model, in, batch.layout, model.config.vq_enabled ? &noise : nullptr, tau,
                          ops::VqMode::kStraightThrough);
        tape.backward(fwd.loss.per_frame);
        for (const auto* p : model.parameters()) grads.push_back(tape.param_grad(*p));
        for (const auto& gr : grads) require(all_finite(gr), ErrorCode::kNonFinite, "non-finite gradient");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (epoch " << epoch << ", tau " << tau << "): " << e.what();
        if (!diagnostic_dir.empty()) {
          std::filesystem::create_directories(diagnostic_dir);
          save_checkpoint(model, diagnostic_dir / "nonfinite_state.npck", {{"failed_step", std::to_string(step)}});
          detail::write_file_bytes(diagnostic_dir / "nonfinite_log.csv", res.log.to_csv());
          msg << "; state dumped to " << (diagnostic_dir / "nonfinite_state.npck").string();
        }
        throw Error(ErrorCode::kNonFinite, msg.str());
      }

      if (cfg.grad_clip > 0) {
        double sq = 0;
        for (const auto& gr : grads) sq += gr.template cast<double>().squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) {
          const float scale = static_cast<float>(cfg.grad_clip / norm);
          for (auto& gr : grads) gr *= scale;
        }
      }
      adam_step(model.parameters(), grads, adam);

      if (step % static_cast<std::uint64_t>(cfg.log_every) == 0) {
        TrainRecord rec;
        rec.step = step;
        rec.epoch = epoch;
        rec.loss_sum = static_cast<double>(fwd.loss.sum);
        rec.loss_per_frame = static_cast<double>(tape.value(fwd.loss.per_frame)(0, 0));
        rec.tau = static_cast<double>(tau);
        if (model.config.vq_enabled) rec.perplexity = codebook_perplexity(fwd.indices, groups, codewords, batch.layout);
        if (cfg.log_wall_clock) {
          rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
        }
        res.log.records.push_back(std::move(rec));
      }
      ++step;
    }
    if (on_epoch) on_epoch(epoch, model, res.log);
  }
  res.steps = step;
  res.final_loss = evaluate_loss(model, corpus);
  return res;
}

}  // namespace npc
