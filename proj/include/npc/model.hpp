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

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "npc/common.hpp"
#include "npc/graph.hpp"
#include "npc/mask_plan.hpp"
#include "npc/ops.hpp"
#include "npc/rng.hpp"
#include "npc/tensor.hpp"

namespace npc {

/// conv(k=3) -> channel_norm -> relu -> + residual. The first block projects
/// the residual with an affine map when d_in != d.
template <typename S>
struct ConvBlockParams {
  Tensor<S> conv_w;  // {3, c_in, d}
  Tensor<S> conv_b;  // {d}
  Tensor<S> norm_scale;
  Tensor<S> norm_shift;
  std::optional<Tensor<S>> proj_w;  // {c_in, d}
  std::optional<Tensor<S>> proj_b;
};

/// Masked conv (W ⊙ D) -> channel_norm -> relu. `mask` is D over taps;
/// W is zero wherever D is zero.
template <typename S>
struct MaskedConvParams {
  Tensor<S> w;  // {k, d, d}
  Tensor<S> b;  // {d}
  Tensor<S> norm_scale;
  Tensor<S> norm_shift;
  ops::TapMask mask;
};

template <typename S>
class NpcModel {
 public:
  NpcConfig config;
  MaskPlan plan;
  std::vector<ConvBlockParams<S>> blocks;
  std::vector<std::optional<MaskedConvParams<S>>> masked;
  Tensor<S> vq_logit_w;  // {d, G*V}
  Tensor<S> vq_logit_b;  // {G*V}
  Tensor<S> codebook;    // {G, V, d/G}
  Tensor<S> head_w;      // {d, d_in}
  Tensor<S> head_b;      // {d_in}

  NpcModel() = default;
  // Tapes hold pointers into the parameter tensors; moving is fine, copying is explicit.
  NpcModel(NpcModel&&) noexcept = default;
  NpcModel& operator=(NpcModel&&) noexcept = default;
  NpcModel clone() const { return NpcModel(*this); }

  /// All-zero parameters except norm scales (1) and the masks.
  static NpcModel zeros(const NpcConfig& cfg) {
    validate(cfg);
    NpcModel m;
    m.config = cfg;
    m.plan = plan_masks(cfg);
    const auto d = static_cast<std::size_t>(cfg.dim);
    const auto din = static_cast<std::size_t>(cfg.input_dim);
    const auto k = static_cast<std::size_t>(m.plan.kernel_size);
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string p = "block" + std::to_string(l + 1) + ".";
      const std::size_t cin = l == 0 ? din : d;
      ConvBlockParams<S> blk{Tensor<S>(p + "conv.weight", {3, cin, d}), Tensor<S>(p + "conv.bias", {d}),
                             Tensor<S>(p + "norm.scale", {d}), Tensor<S>(p + "norm.shift", {d}), std::nullopt,
                             std::nullopt};
      blk.norm_scale.data.setOnes();
      if (l == 0 && din != d) {
        blk.proj_w = Tensor<S>(p + "proj.weight", {din, d});
        blk.proj_b = Tensor<S>(p + "proj.bias", {d});
      }
      m.blocks.push_back(std::move(blk));

      const bool has_masked = cfg.masked_conv_every_layer || l == cfg.layers - 1;
      if (has_masked) {
        const std::string q = "masked" + std::to_string(l + 1) + ".";
        MaskedConvParams<S> mc{Tensor<S>(q + "weight", {k, d, d}), Tensor<S>(q + "bias", {d}),
                               Tensor<S>(q + "norm.scale", {d}), Tensor<S>(q + "norm.shift", {d}),
                               build_mask(m.plan.kernel_size, m.plan.mask_half_width[static_cast<std::size_t>(l)])};
        mc.norm_scale.data.setOnes();
        m.masked.push_back(std::move(mc));
      } else {
        m.masked.push_back(std::nullopt);
      }
    }
    const auto g = static_cast<std::size_t>(cfg.vq_groups);
    const auto v = static_cast<std::size_t>(cfg.vq_codewords);
    m.vq_logit_w = Tensor<S>("vq.logits.weight", {d, g * v});
    m.vq_logit_b = Tensor<S>("vq.logits.bias", {g * v});
    m.codebook = Tensor<S>("vq.codebook", {g, v, d / g});
    m.head_w = Tensor<S>("head.weight", {d, din});
    m.head_b = Tensor<S>("head.bias", {din});
    return m;
  }

  /// uniform(-a, a) with a = 1/sqrt(fan_in); masked taps zeroed afterwards;
  /// codewords drawn from uniform(-1, 1).
  static NpcModel init(const NpcConfig& cfg, std::uint64_t seed) {
    NpcModel m = zeros(cfg);
    Rng rng(seed);
    auto fill = [&rng](Tensor<S>& t, double fan_in) {
      const double a = 1.0 / std::sqrt(fan_in);
      for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = static_cast<S>(rng.uniform(-a, a));
    };
    const double d = cfg.dim;
    const double k = m.plan.kernel_size;
    for (std::size_t l = 0; l < m.blocks.size(); ++l) {
      auto& blk = m.blocks[l];
      const double cin = l == 0 ? cfg.input_dim : d;
      fill(blk.conv_w, 3 * cin);
      fill(blk.conv_b, 3 * cin);
      if (blk.proj_w) {
        fill(*blk.proj_w, cin);
        fill(*blk.proj_b, cin);
      }
      if (auto& mc = m.masked[l]) {
        fill(mc->w, k * d);
        fill(mc->b, k * d);
        m.zero_masked_taps(*mc);
      }
    }
    fill(m.vq_logit_w, d);
    fill(m.vq_logit_b, d);
    fill(m.codebook, 1.0);
    fill(m.head_w, d);
    fill(m.head_b, d);
    return m;
  }

  void zero_masked_taps(MaskedConvParams<S>& mc) const {
    const auto d = mc.w.data.cols();
    for (std::size_t i = 0; i < mc.mask.size(); ++i) {
      if (mc.mask[i] == 0) mc.w.data.middleRows(static_cast<Eigen::Index>(i) * d, d).setZero();
    }
  }

  std::vector<Tensor<S>*> parameters() {
    std::vector<Tensor<S>*> out;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      auto& blk = blocks[l];
      out.insert(out.end(), {&blk.conv_w, &blk.conv_b, &blk.norm_scale, &blk.norm_shift});
      if (blk.proj_w) out.insert(out.end(), {&*blk.proj_w, &*blk.proj_b});
      if (auto& mc = masked[l]) out.insert(out.end(), {&mc->w, &mc->b, &mc->norm_scale, &mc->norm_shift});
    }
    out.insert(out.end(), {&vq_logit_w, &vq_logit_b, &codebook, &head_w, &head_b});
    return out;
  }

  std::vector<const Tensor<S>*> parameters() const {
    auto mut = const_cast<NpcModel*>(this)->parameters();
    return std::vector<const Tensor<S>*>(mut.begin(), mut.end());
  }

  std::size_t num_masked_layers() const {
    std::size_t n = 0;
    for (const auto& mc : masked) n += mc.has_value();
    return n;
  }

  template <typename Other>
  NpcModel<Other> cast() const {
    NpcModel<Other> out = NpcModel<Other>::zeros(config);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->data = src[i]->data.template cast<Other>();
    for (std::size_t l = 0; l < masked.size(); ++l) {
      if (masked[l]) out.masked[l]->mask = masked[l]->mask;
    }
    return out;
  }

  // -- forward pieces, written once for Tape and Eager ----------------------

  template <typename G>
  typename G::Var conv_block_forward(G& g, const typename G::Var& z, std::size_t layer, const SeqLayout& layout) const {
    const auto& blk = blocks.at(layer);
    auto c = g.conv1d(z, blk.conv_w, &blk.conv_b, 3, nullptr, layout);
    c = g.relu(g.channel_norm(std::move(c), blk.norm_scale, blk.norm_shift));
    if (blk.proj_w) return g.add(std::move(c), g.affine(z, *blk.proj_w, &*blk.proj_b));
    return g.add(std::move(c), z);
  }

  template <typename G>
  typename G::Var masked_conv_forward(G& g, const typename G::Var& z, std::size_t layer,
                                      const SeqLayout& layout) const {
    const auto& mc = masked.at(layer);
    require(mc.has_value(), ErrorCode::kInvalidArgument, "layer has no masked conv");
    auto c = g.conv1d(z, mc->w, &mc->b, static_cast<std::size_t>(plan.kernel_size), &mc->mask, layout);
    return g.relu(g.channel_norm(std::move(c), mc->norm_scale, mc->norm_shift));
  }

  /// h_t: sum over layers of the masked-conv outputs.
  template <typename G>
  typename G::Var encode(G& g, const typename G::Var& x, const SeqLayout& layout) const {
    require(g.value(x).cols() == config.input_dim, ErrorCode::kShapeMismatch,
            "input dim " + std::to_string(g.value(x).cols()) + " != model d_in " + std::to_string(config.input_dim));
    typename G::Var z = x;
    std::optional<typename G::Var> h;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      z = conv_block_forward(g, z, l, layout);
      if (masked[l]) {
        auto m = masked_conv_forward(g, z, l, layout);
        h = h ? g.add(std::move(*h), m) : std::move(m);
      }
    }
    return std::move(*h);
  }

  template <typename G>
  VqResult<typename G::Var, S> vq_forward(G& g, const typename G::Var& h, const Mat<S>* noise, S tau,
                                          ops::VqMode mode) const {
    auto logits = g.affine(h, vq_logit_w, &vq_logit_b);
    return g.vq(logits, codebook, static_cast<std::size_t>(config.vq_groups), noise, tau, mode);
  }

  template <typename G>
  typename G::Var predict(G& g, const typename G::Var& q) const {
    return g.affine(q, head_w, &head_b);
  }

  /// Eager single-sequence encode: frames T x d_in -> H T x d.
  Mat<S> encode(const Mat<S>& frames) const {
    Eager<S> g;
    return encode(g, frames, SeqLayout::single(static_cast<std::size_t>(frames.rows())));
  }

 private:
  NpcModel(const NpcModel&) = default;
};

template <typename G>
struct NpcForward {
  typename G::Var h;
  typename G::Var y;
  LossResult<typename G::Var, typename G::Scalar> loss;
  std::vector<std::int32_t> indices;  // empty when VQ is disabled
};

/// encode -> VQ (if enabled) -> predict -> L1 against the input itself.
template <typename G>
NpcForward<G> npc_forward(G& g, const NpcModel<typename G::Scalar>& model, const typename G::Var& x,
                          const SeqLayout& layout, const Mat<typename G::Scalar>* noise, typename G::Scalar tau,
                          ops::VqMode mode) {
  NpcForward<G> out{model.encode(g, x, layout), {}, {}, {}};
  if (model.config.vq_enabled) {
    auto vq = model.vq_forward(g, out.h, noise, tau, mode);
    out.indices = std::move(vq.indices);
    out.y = model.predict(g, vq.q);
  } else {
    out.y = model.predict(g, out.h);
  }
  out.loss = g.l1(out.y, x, layout);
  return out;
}

/// Gumbel noise for every valid row, drawn in (sequence, frame, column) order;
/// padding rows stay zero so padding never shifts the stream.
template <typename S>
Mat<S> sample_gumbel_noise(const SeqLayout& layout, Eigen::Index cols, Rng& rng) {
  Mat<S> noise = Mat<S>::Zero(static_cast<Eigen::Index>(layout.rows()), cols);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    for (std::size_t t = 0; t < layout.lengths[b]; ++t) {
      const auto r = static_cast<Eigen::Index>(layout.offset(b) + t);
      for (Eigen::Index c = 0; c < cols; ++c) noise(r, c) = static_cast<S>(rng.gumbel());
    }
  }
  return noise;
}

/// exp(entropy) of hard codeword usage over valid rows, per group.
inline std::vector<double> codebook_perplexity(const std::vector<std::int32_t>& indices, std::size_t groups,
                                               std::size_t codewords, const SeqLayout& layout) {
  std::vector<double> out(groups, 0.0);
  if (indices.empty()) return out;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<double> counts(codewords, 0.0);
    double n = 0;
    for (std::size_t r = 0; r < layout.rows(); ++r) {
      if (!layout.is_valid(r)) continue;
      counts[static_cast<std::size_t>(indices[r * groups + g])] += 1.0;
      n += 1.0;
    }
    double entropy = 0;
    for (double c : counts) {
      if (c > 0) entropy -= (c / n) * std::log(c / n);
    }
    out[g] = n > 0 ? std::exp(entropy) : 0.0;
  }
  return out;
}

template <typename S>
struct LossValue {
  S sum = 0;
  S per_frame = 0;
};

/// Sum over time and feature dims of |y_t - x_t|, and its per-frame mean.
template <typename S>
LossValue<S> npc_loss(const Mat<S>& y, const Mat<S>& x) {
  const auto v = ops::l1_forward(y, x, SeqLayout::single(static_cast<std::size_t>(x.rows())));
  return {v.sum, v.per_frame};
}

}  // namespace npc
