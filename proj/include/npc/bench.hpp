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

// Forward-only baselines with random fixed-seed weights, and a wall-clock
// harness. Inputs are batch x T x d_in stored as rows b * T + t; outputs are
// batch x T x d in the same layout.

#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "npc/config.hpp"
#include "npc/model.hpp"
#include "npc/rng.hpp"

namespace npc {

using BenchMat = Mat<float>;

enum class BaselineKind { kGru, kBiGru, kTransformer, kNpc, kEmpty };

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kGru: return "gru";
    case BaselineKind::kBiGru: return "bigru";
    case BaselineKind::kTransformer: return "transformer";
    case BaselineKind::kNpc: return "npc";
    case BaselineKind::kEmpty: return "empty";
  }
  return "unknown";
}

inline BaselineKind parse_baseline_kind(const std::string& s) {
  for (auto k : {BaselineKind::kGru, BaselineKind::kBiGru, BaselineKind::kTransformer, BaselineKind::kNpc,
                 BaselineKind::kEmpty}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::kConfig, "unknown baseline kind '" + s + "'");
}

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kNpc;
  int layers = 3;
  int input_dim = 80;  // surface feature width
  int d = 512;
  int heads = 8;
  int npc_receptive_field = 19;
  int npc_input_mask = 5;
  std::uint64_t seed = 0;

  void validate() const {
    require(layers >= 1 && d >= 1 && input_dim >= 1, ErrorCode::kConfig, "baseline sizes must be positive");
    if (kind == BaselineKind::kTransformer) {
      require(heads >= 1 && d % heads == 0, ErrorCode::kConfig,
              "transformer d=" + std::to_string(d) + " not divisible by heads=" + std::to_string(heads));
    }
    if (kind == BaselineKind::kNpc) plan_masks(layers, npc_receptive_field, npc_input_mask);
  }
};

namespace bench_detail {

inline BenchMat uniform_mat(Eigen::Index rows, Eigen::Index cols, double a, Rng& rng) {
  BenchMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(-a, a));
  return m;
}

/// rows b * T + t  <->  rows t * B + b
inline BenchMat swap_major(const BenchMat& x, std::size_t outer, std::size_t inner) {
  BenchMat y(x.rows(), x.cols());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i)
      y.row(static_cast<Eigen::Index>(i * outer + o)) = x.row(static_cast<Eigen::Index>(o * inner + i));
  return y;
}

inline void softmax_rows(BenchMat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

inline void layer_norm_rows(const BenchMat& x, BenchMat& y) {
  y.resize(x.rows(), x.cols());
  const float n = static_cast<float>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const float mean = x.row(r).sum() / n;
    const float var = (x.row(r).array() - mean).square().sum() / n;
    y.row(r) = (x.row(r).array() - mean) / std::sqrt(var + static_cast<float>(ops::kNormEps));
  }
}

}  // namespace bench_detail

// ---------------------------------------------------------------------------
// GRU. Gate columns are ordered r, z, n:
//   r = sigmoid(x Wir + bir + h Whr + bhr)
//   z = sigmoid(x Wiz + biz + h Whz + bhz)
//   n = tanh(x Win + bin + r * (h Whn + bhn))
//   h' = (1 - z) * n + z * h

struct GruCell {
  BenchMat wi;  // d_in x 3d
  BenchMat bi;  // 1 x 3d
  BenchMat wh;  // d x 3d
  BenchMat bh;  // 1 x 3d

  static GruCell random(Eigen::Index din, Eigen::Index d, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    return {bench_detail::uniform_mat(din, 3 * d, a, rng), bench_detail::uniform_mat(1, 3 * d, a, rng),
            bench_detail::uniform_mat(d, 3 * d, a, rng), bench_detail::uniform_mat(1, 3 * d, a, rng)};
  }
};

/// One direction over time-major input (rows t * B + b); writes h into
/// columns [col0, col0 + d) of `out`.
inline void gru_scan(const BenchMat& xtm, std::size_t batch, std::size_t T, const GruCell& p, bool reverse,
                     BenchMat& out, Eigen::Index col0) {
  const Eigen::Index d = p.wh.rows();
  const auto B = static_cast<Eigen::Index>(batch);
  BenchMat xi(xtm.rows(), 3 * d);
  xi.noalias() = xtm * p.wi;
  xi.rowwise() += p.bi.row(0);
  BenchMat h = BenchMat::Zero(B, d);
  BenchMat hh(B, 3 * d);
  for (std::size_t s = 0; s < T; ++s) {
    const auto t = static_cast<Eigen::Index>(reverse ? T - 1 - s : s);
    hh.noalias() = h * p.wh;
    hh.rowwise() += p.bh.row(0);
    const auto xg = xi.middleRows(t * B, B).array();
    const auto r = (1.0f / (1.0f + (-(xg.leftCols(d) + hh.leftCols(d).array())).exp())).eval();
    const auto z = (1.0f / (1.0f + (-(xg.middleCols(d, d) + hh.middleCols(d, d).array())).exp())).eval();
    const auto n = (xg.rightCols(d) + r * hh.rightCols(d).array()).tanh().eval();
    h = ((1.0f - z) * n + z * h.array()).matrix();
    out.block(t * B, col0, B, d) = h;
  }
}

struct GruStack {
  bool bidirectional = false;
  std::vector<GruCell> fwd;
  std::vector<GruCell> bwd;
  BenchMat proj_w;  // 2d x d, bidirectional only
  BenchMat proj_b;

  static GruStack random(int layers, int input_dim, int d, bool bidirectional, Rng& rng) {
    GruStack s;
    s.bidirectional = bidirectional;
    const int width = bidirectional ? 2 * d : d;
    for (int l = 0; l < layers; ++l) {
      const int din = l == 0 ? input_dim : width;
      s.fwd.push_back(GruCell::random(din, d, rng));
      if (bidirectional) s.bwd.push_back(GruCell::random(din, d, rng));
    }
    if (bidirectional) {
      const double a = 1.0 / std::sqrt(2.0 * d);
      s.proj_w = bench_detail::uniform_mat(2 * d, d, a, rng);
      s.proj_b = bench_detail::uniform_mat(1, d, a, rng);
    }
    return s;
  }

  BenchMat forward(const BenchMat& x, std::size_t batch, std::size_t T) const {
    const Eigen::Index d = fwd.front().wh.rows();
    BenchMat z = bench_detail::swap_major(x, batch, T);
    for (std::size_t l = 0; l < fwd.size(); ++l) {
      BenchMat next(z.rows(), bidirectional ? 2 * d : d);
      gru_scan(z, batch, T, fwd[l], false, next, 0);
      if (bidirectional) gru_scan(z, batch, T, bwd[l], true, next, d);
      z = std::move(next);
    }
    if (bidirectional) {
      BenchMat p(z.rows(), d);
      p.noalias() = z * proj_w;
      p.rowwise() += proj_b.row(0);
      z = std::move(p);
    }
    return bench_detail::swap_major(z, T, batch);
  }
};

// ---------------------------------------------------------------------------
// Pre-norm transformer encoder with sinusoidal positions and full attention.

struct TransformerLayer {
  BenchMat wqkv, bqkv;  // d x 3d
  BenchMat wo, bo;      // d x d
  BenchMat w1, b1;      // d x 4d
  BenchMat w2, b2;      // 4d x d
};

inline BenchMat sinusoidal_positions(std::size_t T, Eigen::Index d) {
  BenchMat pe(static_cast<Eigen::Index>(T), d);
  for (std::size_t t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      const double a = static_cast<double>(t) * freq;
      pe(static_cast<Eigen::Index>(t), i) = static_cast<float>(i % 2 == 0 ? std::sin(a) : std::cos(a));
    }
  }
  return pe;
}

/// softmax(q k^T / sqrt(d_head)); rows index queries.
template <typename Q, typename K>
BenchMat attention_probs(const Q& q, const K& k) {
  BenchMat s(q.rows(), k.rows());
  s.noalias() = q * k.transpose();
  s *= 1.0f / std::sqrt(static_cast<float>(q.cols()));
  bench_detail::softmax_rows(s);
  return s;
}

struct Transformer {
  int heads = 8;
  BenchMat in_w, in_b;  // d_in x d input projection
  std::vector<TransformerLayer> layers;

  static Transformer random(int n_layers, int input_dim, int d, int heads, Rng& rng) {
    using bench_detail::uniform_mat;
    Transformer tf;
    tf.heads = heads;
    const double ai = 1.0 / std::sqrt(static_cast<double>(input_dim));
    tf.in_w = uniform_mat(input_dim, d, ai, rng);
    tf.in_b = uniform_mat(1, d, ai, rng);
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    const double a4 = 1.0 / std::sqrt(4.0 * d);
    for (int l = 0; l < n_layers; ++l) {
      tf.layers.push_back({uniform_mat(d, 3 * d, a, rng), uniform_mat(1, 3 * d, a, rng), uniform_mat(d, d, a, rng),
                           uniform_mat(1, d, a, rng), uniform_mat(d, 4 * d, a, rng), uniform_mat(1, 4 * d, a, rng),
                           uniform_mat(4 * d, d, a4, rng), uniform_mat(1, d, a4, rng)});
    }
    return tf;
  }

  /// `probs`, when given, receives the layer-0 attention matrix of every
  /// (sequence, head) pair in order b * heads + h.
  BenchMat forward(const BenchMat& x, std::size_t batch, std::size_t T, std::vector<BenchMat>* probs = nullptr) const {
    const Eigen::Index d = in_w.cols();
    const Eigen::Index dh = d / heads;
    const auto Ti = static_cast<Eigen::Index>(T);
    const BenchMat pe = sinusoidal_positions(T, d);
    BenchMat z(x.rows(), d);
    z.noalias() = x * in_w;
    z.rowwise() += in_b.row(0);
    for (std::size_t b = 0; b < batch; ++b) z.middleRows(static_cast<Eigen::Index>(b) * Ti, Ti) += pe;

    BenchMat a, qkv(z.rows(), 3 * d), att(z.rows(), d), f(z.rows(), 4 * d), tmp(z.rows(), d);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& p = layers[l];
      bench_detail::layer_norm_rows(z, a);
      qkv.noalias() = a * p.wqkv;
      qkv.rowwise() += p.bqkv.row(0);
      for (std::size_t b = 0; b < batch; ++b) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * Ti;
        for (int h = 0; h < heads; ++h) {
          const Eigen::Index c = h * dh;
          BenchMat pr = attention_probs(qkv.block(r0, c, Ti, dh), qkv.block(r0, d + c, Ti, dh));
          att.block(r0, c, Ti, dh).noalias() = pr * qkv.block(r0, 2 * d + c, Ti, dh);
          if (probs != nullptr && l == 0) probs->push_back(std::move(pr));
        }
      }
      tmp.noalias() = att * p.wo;
      z += tmp;
      z.rowwise() += p.bo.row(0);
      bench_detail::layer_norm_rows(z, a);
      f.noalias() = a * p.w1;
      f.rowwise() += p.b1.row(0);
      f = f.cwiseMax(0.0f);
      tmp.noalias() = f * p.w2;
      z += tmp;
      z.rowwise() += p.b2.row(0);
    }
    bench_detail::layer_norm_rows(z, a);
    return a;
  }
};

// ---------------------------------------------------------------------------

/// A spec instantiated with random weights.
class Baseline {
 public:
  explicit Baseline(const BaselineSpec& spec) : spec_(spec) {
    spec.validate();
    Rng rng = Rng(spec.seed).fork(21);
    switch (spec.kind) {
      case BaselineKind::kGru:
      case BaselineKind::kBiGru:
        gru_ = GruStack::random(spec.layers, spec.input_dim, spec.d, spec.kind == BaselineKind::kBiGru, rng);
        break;
      case BaselineKind::kTransformer:
        tf_ = Transformer::random(spec.layers, spec.input_dim, spec.d, spec.heads, rng);
        break;
      case BaselineKind::kNpc: {
        NpcConfig cfg;
        cfg.layers = spec.layers;
        cfg.receptive_field = spec.npc_receptive_field;
        cfg.input_mask = spec.npc_input_mask;
        cfg.dim = spec.d;
        cfg.input_dim = spec.input_dim;
        cfg.vq_groups = 1;
        npc_ = std::make_unique<NpcModel<float>>(NpcModel<float>::init(cfg, rng.next_u64()));
        break;
      }
      case BaselineKind::kEmpty:
        break;
    }
  }

  const BaselineSpec& spec() const { return spec_; }

  /// x: (batch * T) x d_in. The empty spec leaves `out` untouched.
  void forward(const BenchMat& x, std::size_t batch, std::size_t T, BenchMat& out) const {
    require(x.rows() == static_cast<Eigen::Index>(batch * T) && x.cols() == spec_.input_dim,
            ErrorCode::kShapeMismatch, "baseline input must be (batch*T) x d_in");
    switch (spec_.kind) {
      case BaselineKind::kGru:
      case BaselineKind::kBiGru: out = gru_->forward(x, batch, T); break;
      case BaselineKind::kTransformer: out = tf_->forward(x, batch, T); break;
      case BaselineKind::kNpc: {
        Eager<float> g;
        out = npc_->encode(g, x, SeqLayout::uniform(batch, T));
        break;
      }
      case BaselineKind::kEmpty: break;
    }
  }

  BenchMat forward(const BenchMat& x, std::size_t batch, std::size_t T) const {
    BenchMat out;
    forward(x, batch, T, out);
    return out;
  }

  const GruStack* gru() const { return gru_ ? &*gru_ : nullptr; }
  const Transformer* transformer() const { return tf_ ? &*tf_ : nullptr; }
  const NpcModel<float>* npc() const { return npc_.get(); }

 private:
  BaselineSpec spec_;
  std::optional<GruStack> gru_;
  std::optional<Transformer> tf_;
  std::unique_ptr<NpcModel<float>> npc_;
};

// ---------------------------------------------------------------------------

inline void set_compute_threads(int threads) {
  require(threads >= 1, ErrorCode::kConfig, "threads must be >= 1");
  Eigen::setNbThreads(threads);
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
}

struct BenchRecord {
  std::string kind;
  int T = 0;
  int d = 0;
  int batch = 0;
  int threads = 1;
  int reps = 0;
  double mean_ms = 0;
  double std_ms = 0;
  double per_frame_us = 0;
  std::vector<double> samples_ms;
};

inline BenchMat bench_input(std::size_t batch, std::size_t T, int d, std::uint64_t seed) {
  Rng rng = Rng(seed).fork(22);
  BenchMat x(static_cast<Eigen::Index>(batch * T), d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
  return x;
}

/// Mean and sample std of `reps` timed forwards on one pre-generated input,
/// after `warmup` discarded calls.
inline BenchRecord bench_run(const Baseline& model, int T, int batch, int reps, int warmup, int threads) {
  require(reps >= 10, ErrorCode::kConfig, "bench needs reps >= 10");
  require(warmup >= 3, ErrorCode::kConfig, "bench needs warmup >= 3");
  require(T >= 1 && batch >= 1, ErrorCode::kConfig, "bench T and batch must be positive");
  set_compute_threads(threads);
  const auto B = static_cast<std::size_t>(batch);
  const auto Tn = static_cast<std::size_t>(T);
  const BenchMat x = bench_input(B, Tn, model.spec().input_dim, model.spec().seed);
  BenchMat out;
  for (int i = 0; i < warmup; ++i) model.forward(x, B, Tn, out);

  BenchRecord rec;
  rec.kind = to_string(model.spec().kind);
  rec.T = T;
  rec.d = model.spec().d;
  rec.batch = batch;
  rec.threads = threads;
  rec.reps = reps;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    model.forward(x, B, Tn, out);
    const auto t1 = std::chrono::steady_clock::now();
    rec.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  double sum = 0;
  for (double s : rec.samples_ms) sum += s;
  rec.mean_ms = sum / reps;
  double ss = 0;
  for (double s : rec.samples_ms) ss += (s - rec.mean_ms) * (s - rec.mean_ms);
  rec.std_ms = std::sqrt(ss / (reps - 1));
  rec.per_frame_us = rec.mean_ms * 1000.0 / (static_cast<double>(batch) * T);
  return rec;
}

inline BenchRecord bench_run(const BaselineSpec& spec, int T, int batch, int reps, int warmup, int threads) {
  return bench_run(Baseline(spec), T, batch, reps, warmup, threads);
}

inline double pooled_std(const BenchRecord& a, const BenchRecord& b) {
  return std::sqrt((a.std_ms * a.std_ms + b.std_ms * b.std_ms) / 2.0);
}

struct ScalingResult {
  std::vector<BenchRecord> records;
  double slope = 0;         // d log(total time) / d log T
  double per_frame_cv = 0;  // coefficient of variation of per-frame time
};

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 3, ErrorCode::kInvalidArgument, "slope fit needs >= 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  require(den > 0, ErrorCode::kInvalidArgument, "slope fit needs distinct x values");
  return (n * sxy - sx * sy) / den;
}

inline ScalingResult scaling_sweep(const BaselineSpec& spec, const std::vector<int>& T_list, int batch, int reps,
                                   int warmup, int threads) {
  require(T_list.size() >= 3, ErrorCode::kConfig, "scaling sweep needs >= 3 values of T");
  const Baseline model(spec);
  ScalingResult res;
  std::vector<double> xs, ys, pf;
  for (int T : T_list) {
    res.records.push_back(bench_run(model, T, batch, reps, warmup, threads));
    xs.push_back(T);
    ys.push_back(res.records.back().mean_ms);
    pf.push_back(res.records.back().per_frame_us);
  }
  res.slope = log_log_slope(xs, ys);
  double mean = 0;
  for (double v : pf) mean += v;
  mean /= static_cast<double>(pf.size());
  double ss = 0;
  for (double v : pf) ss += (v - mean) * (v - mean);
  res.per_frame_cv = std::sqrt(ss / static_cast<double>(pf.size() - 1)) / mean;
  return res;
}

/// CSV with relative_to_npc = mean / mean of the NPC row at the same T, batch
/// and thread count (falling back to the first NPC row; empty without one).
inline std::string emit_report(const std::vector<BenchRecord>& records) {
  require(!records.empty(), ErrorCode::kInvalidArgument, "bench report needs at least one record");
  auto npc_mean = [&records](const BenchRecord& r) -> std::optional<double> {
    std::optional<double> first;
    for (const auto& n : records) {
      if (n.kind != "npc") continue;
      if (n.T == r.T && n.batch == r.batch && n.threads == r.threads) return n.mean_ms;
      if (!first) first = n.mean_ms;
    }
    return first;
  };
  std::ostringstream out;
  out << "kind,T,d,batch,threads,reps,mean_ms,std_ms,per_frame_us,relative_to_npc\n";
  for (const auto& r : records) {
    out << r.kind << ',' << r.T << ',' << r.d << ',' << r.batch << ',' << r.threads << ',' << r.reps << ','
        << format_number(r.mean_ms) << ',' << format_number(r.std_ms) << ',' << format_number(r.per_frame_us) << ',';
    if (const auto m = npc_mean(r)) out << format_number(r.mean_ms / *m);
    out << '\n';
  }
  return out.str();
}

}  // namespace npc
