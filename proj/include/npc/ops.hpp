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

// Forward and backward kernels for the closed primitive set. Graph front-ends
// (Tape, Eager) call into these; nothing here records anything.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "npc/common.hpp"
#include "npc/tensor.hpp"

namespace npc::ops {

inline constexpr double kNormEps = 1e-5;
inline constexpr std::ptrdiff_t kConvTimeBlock = 1024;

/// Binary per-tap mask; 0 means the tap is never read.
using TapMask = std::vector<std::uint8_t>;

inline bool tap_active(const TapMask* mask, std::size_t i) { return mask == nullptr || (*mask)[i] != 0; }

// ---------------------------------------------------------------------------
// conv1d: "same" zero padding within each sequence; padding rows yield zeros.
// Kernel is (k * c_in) x c_out, tap i applied at time offset i - (k-1)/2.

template <typename S>
Mat<S> conv1d_forward(const Mat<S>& x, const Mat<S>& w, const Mat<S>* bias, std::size_t k, const TapMask* mask,
                      const SeqLayout& layout) {
  const Eigen::Index cin = x.cols();
  const Eigen::Index cout = w.cols();
  require(k % 2 == 1, ErrorCode::kShapeMismatch, "conv1d kernel size must be odd");
  require(w.rows() == static_cast<Eigen::Index>(k) * cin, ErrorCode::kShapeMismatch, "conv1d kernel rows != k*c_in");
  require(static_cast<std::size_t>(x.rows()) == layout.rows(), ErrorCode::kShapeMismatch, "conv1d input rows");
  require(mask == nullptr || mask->size() == k, ErrorCode::kShapeMismatch, "conv1d mask length != k");
  require(bias == nullptr || (bias->rows() == 1 && bias->cols() == cout), ErrorCode::kShapeMismatch, "conv1d bias");

  Mat<S> y = Mat<S>::Zero(x.rows(), cout);
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const auto base = static_cast<Eigen::Index>(layout.offset(b));
    const auto len = static_cast<std::ptrdiff_t>(layout.lengths[b]);
    if (bias != nullptr && len > 0) y.middleRows(base, len).rowwise() = bias->row(0);
    // Time blocks keep the input rows of every tap cache-resident.
    for (std::ptrdiff_t c0 = 0; c0 < len; c0 += kConvTimeBlock) {
      const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(len, c0 + kConvTimeBlock);
      for (std::size_t i = 0; i < k; ++i) {
        if (!tap_active(mask, i)) continue;
        const std::ptrdiff_t o = static_cast<std::ptrdiff_t>(i) - half;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(c0, -o);
        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(c1, len - o);
        if (t1 <= t0) continue;
        y.middleRows(base + t0, t1 - t0).noalias() +=
            x.middleRows(base + t0 + o, t1 - t0) * w.middleRows(static_cast<Eigen::Index>(i) * cin, cin);
      }
    }
  }
  return y;
}

/// Accumulates into dx, dw, dbias (any may be null). Masked taps receive no gradient.
template <typename S>
void conv1d_backward(const Mat<S>& dy, const Mat<S>& x, const Mat<S>& w, std::size_t k, const TapMask* mask,
                     const SeqLayout& layout, Mat<S>* dx, Mat<S>* dw, Mat<S>* dbias) {
  const Eigen::Index cin = x.cols();
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const auto base = static_cast<Eigen::Index>(layout.offset(b));
    const auto len = static_cast<std::ptrdiff_t>(layout.lengths[b]);
    for (std::size_t i = 0; i < k; ++i) {
      if (!tap_active(mask, i)) continue;
      const std::ptrdiff_t o = static_cast<std::ptrdiff_t>(i) - half;
      const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -o);
      const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(len, len - o);
      if (t1 <= t0) continue;
      const auto n = t1 - t0;
      const auto tap = w.middleRows(static_cast<Eigen::Index>(i) * cin, cin);
      if (dx != nullptr) dx->middleRows(base + t0 + o, n).noalias() += dy.middleRows(base + t0, n) * tap.transpose();
      if (dw != nullptr) {
        dw->middleRows(static_cast<Eigen::Index>(i) * cin, cin).noalias() +=
            x.middleRows(base + t0 + o, n).transpose() * dy.middleRows(base + t0, n);
      }
    }
    if (dbias != nullptr && len > 0) dbias->row(0) += dy.middleRows(base, len).colwise().sum();
  }
}

// ---------------------------------------------------------------------------
// affine: y = x W + b

template <typename S>
Mat<S> affine_forward(const Mat<S>& x, const Mat<S>& w, const Mat<S>* bias) {
  require(x.cols() == w.rows(), ErrorCode::kShapeMismatch, "affine: x cols != W rows");
  require(bias == nullptr || (bias->rows() == 1 && bias->cols() == w.cols()), ErrorCode::kShapeMismatch,
          "affine bias");
  Mat<S> y(x.rows(), w.cols());
  y.noalias() = x * w;
  if (bias != nullptr) y.rowwise() += bias->row(0);
  return y;
}

template <typename S>
void affine_backward(const Mat<S>& dy, const Mat<S>& x, const Mat<S>& w, Mat<S>* dx, Mat<S>* dw, Mat<S>* dbias) {
  if (dx != nullptr) dx->noalias() += dy * w.transpose();
  if (dw != nullptr) dw->noalias() += x.transpose() * dy;
  if (dbias != nullptr) dbias->row(0) += dy.colwise().sum();
}

// ---------------------------------------------------------------------------
// relu / abs / add / sum

template <typename S>
Mat<S> relu_forward(const Mat<S>& x) {
  return x.cwiseMax(S(0));
}

template <typename S>
void relu_backward(const Mat<S>& dy, const Mat<S>& x, Mat<S>& dx) {
  dx.array() += (x.array() > S(0)).select(dy.array(), S(0));
}

template <typename S>
Mat<S> abs_forward(const Mat<S>& x) {
  return x.cwiseAbs();
}

/// Subgradient at 0 is 0.
template <typename S>
void abs_backward(const Mat<S>& dy, const Mat<S>& x, Mat<S>& dx) {
  dx.array() += dy.array() * x.array().sign();
}

// ---------------------------------------------------------------------------
// channel_norm: statistics over the channel axis of each frame only.

template <typename S>
struct ChannelNormSaved {
  Mat<S> xhat;
  std::vector<S> inv_std;
};

template <typename S>
Mat<S> channel_norm_forward(const Mat<S>& x, const Mat<S>& scale, const Mat<S>& shift, ChannelNormSaved<S>* saved) {
  const Eigen::Index c = x.cols();
  require(scale.cols() == c && shift.cols() == c, ErrorCode::kShapeMismatch, "channel_norm scale/shift width");
  Mat<S> y(x.rows(), c);
  Mat<S> xhat(x.rows(), c);
  std::vector<S> inv(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mean = x.row(r).sum() / static_cast<S>(c);
    xhat.row(r) = x.row(r).array() - mean;
    const S var = xhat.row(r).squaredNorm() / static_cast<S>(c);
    const S is = S(1) / std::sqrt(var + static_cast<S>(kNormEps));
    inv[static_cast<std::size_t>(r)] = is;
    xhat.row(r) *= is;
    y.row(r) = xhat.row(r).cwiseProduct(scale.row(0)) + shift.row(0);
  }
  if (saved != nullptr) {
    saved->xhat = std::move(xhat);
    saved->inv_std = std::move(inv);
  }
  return y;
}

/// Forward without saved state, overwriting x.
template <typename S>
void channel_norm_inplace(Mat<S>& x, const Mat<S>& scale, const Mat<S>& shift) {
  const Eigen::Index c = x.cols();
  require(scale.cols() == c && shift.cols() == c, ErrorCode::kShapeMismatch, "channel_norm scale/shift width");
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mean = x.row(r).sum() / static_cast<S>(c);
    x.row(r).array() -= mean;
    const S is = S(1) / std::sqrt(x.row(r).squaredNorm() / static_cast<S>(c) + static_cast<S>(kNormEps));
    x.row(r) = (x.row(r) * is).cwiseProduct(scale.row(0)) + shift.row(0);
  }
}

template <typename S>
void channel_norm_backward(const Mat<S>& dy, const Mat<S>& scale, const ChannelNormSaved<S>& saved, Mat<S>* dx,
                           Mat<S>* dscale, Mat<S>* dshift) {
  const Eigen::Index c = dy.cols();
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    if (dx != nullptr) {
      S mean_g = 0;
      S mean_gx = 0;
      for (Eigen::Index j = 0; j < c; ++j) {
        const S g = dy(r, j) * scale(0, j);
        mean_g += g;
        mean_gx += g * saved.xhat(r, j);
      }
      mean_g /= static_cast<S>(c);
      mean_gx /= static_cast<S>(c);
      const S is = saved.inv_std[static_cast<std::size_t>(r)];
      for (Eigen::Index j = 0; j < c; ++j) {
        (*dx)(r, j) += is * (dy(r, j) * scale(0, j) - mean_g - saved.xhat(r, j) * mean_gx);
      }
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      if (dscale != nullptr) (*dscale)(0, j) += dy(r, j) * saved.xhat(r, j);
      if (dshift != nullptr) (*dshift)(0, j) += dy(r, j);
    }
  }
}

// ---------------------------------------------------------------------------
// Group-wise Gumbel-softmax vector quantization.
// logits: N x (G*V); codebook: (G*V) x (d/G); output N x d.

enum class VqMode {
  kStraightThrough,  // forward = hard codeword, gradient through the soft path
  kSoft,             // forward = probability-weighted codewords (smooth, for gradient checks)
};

template <typename S>
struct VqSaved {
  Mat<S> probs;                       // N x (G*V), softmax((logits + noise) / tau)
  std::vector<std::int32_t> indices;  // N x G, row-major
};

template <typename S>
Mat<S> vq_forward(const Mat<S>& logits, const Mat<S>& codebook, std::size_t groups, const Mat<S>* noise, S tau,
                  VqMode mode, VqSaved<S>& saved) {
  if (!(tau > S(0))) throw Error(ErrorCode::kInvalidArgument, "Gumbel temperature must be > 0");
  require(groups >= 1 && codebook.rows() % static_cast<Eigen::Index>(groups) == 0, ErrorCode::kShapeMismatch,
          "codebook rows not divisible by groups");
  require(logits.cols() == codebook.rows(), ErrorCode::kShapeMismatch, "vq logits width != groups*codewords");
  require(noise == nullptr || (noise->rows() == logits.rows() && noise->cols() == logits.cols()),
          ErrorCode::kShapeMismatch, "vq noise shape");
  const auto g_count = static_cast<Eigen::Index>(groups);
  const Eigen::Index v_count = codebook.rows() / g_count;
  const Eigen::Index dg = codebook.cols();

  Mat<S> q = Mat<S>::Zero(logits.rows(), g_count * dg);
  saved.probs.resize(logits.rows(), logits.cols());
  saved.indices.assign(static_cast<std::size_t>(logits.rows() * g_count), 0);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    for (Eigen::Index g = 0; g < g_count; ++g) {
      const Eigen::Index off = g * v_count;
      S zmax = -std::numeric_limits<S>::infinity();
      for (Eigen::Index v = 0; v < v_count; ++v) {
        const S z = (logits(r, off + v) + (noise ? (*noise)(r, off + v) : S(0))) / tau;
        saved.probs(r, off + v) = z;
        zmax = std::max(zmax, z);
      }
      S total = 0;
      for (Eigen::Index v = 0; v < v_count; ++v) {
        const S e = std::exp(saved.probs(r, off + v) - zmax);
        saved.probs(r, off + v) = e;
        total += e;
      }
      Eigen::Index best = 0;
      for (Eigen::Index v = 0; v < v_count; ++v) {
        saved.probs(r, off + v) /= total;
        if (saved.probs(r, off + v) > saved.probs(r, off + best)) best = v;
      }
      saved.indices[static_cast<std::size_t>(r * g_count + g)] = static_cast<std::int32_t>(best);
      auto out = q.row(r).segment(g * dg, dg);
      if (mode == VqMode::kStraightThrough) {
        out = codebook.row(off + best);
      } else {
        for (Eigen::Index v = 0; v < v_count; ++v) out += saved.probs(r, off + v) * codebook.row(off + v);
      }
    }
  }
  return q;
}

template <typename S>
void vq_backward(const Mat<S>& dq, const Mat<S>& codebook, std::size_t groups, S tau, VqMode mode,
                 const VqSaved<S>& saved, Mat<S>* dlogits, Mat<S>* dcodebook) {
  const auto g_count = static_cast<Eigen::Index>(groups);
  const Eigen::Index v_count = codebook.rows() / g_count;
  const Eigen::Index dg = codebook.cols();
  std::vector<S> dp(static_cast<std::size_t>(v_count));
  for (Eigen::Index r = 0; r < dq.rows(); ++r) {
    for (Eigen::Index g = 0; g < g_count; ++g) {
      const Eigen::Index off = g * v_count;
      const auto grad = dq.row(r).segment(g * dg, dg);
      if (dcodebook != nullptr) {
        if (mode == VqMode::kStraightThrough) {
          dcodebook->row(off + saved.indices[static_cast<std::size_t>(r * g_count + g)]) += grad;
        } else {
          for (Eigen::Index v = 0; v < v_count; ++v) dcodebook->row(off + v) += saved.probs(r, off + v) * grad;
        }
      }
      if (dlogits != nullptr) {
        S dot = 0;
        for (Eigen::Index v = 0; v < v_count; ++v) {
          dp[static_cast<std::size_t>(v)] = grad.dot(codebook.row(off + v));
          dot += saved.probs(r, off + v) * dp[static_cast<std::size_t>(v)];
        }
        for (Eigen::Index v = 0; v < v_count; ++v) {
          (*dlogits)(r, off + v) += saved.probs(r, off + v) * (dp[static_cast<std::size_t>(v)] - dot) / tau;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// l1: mean over valid frames of sum_c |y - x|; padding rows excluded.

template <typename S>
struct L1Value {
  S sum = 0;
  S per_frame = 0;
  std::size_t frames = 0;
};

template <typename S>
L1Value<S> l1_forward(const Mat<S>& y, const Mat<S>& x, const SeqLayout& layout) {
  require(y.rows() == x.rows() && y.cols() == x.cols(), ErrorCode::kShapeMismatch, "l1: prediction/target shape");
  require(static_cast<std::size_t>(y.rows()) == layout.rows(), ErrorCode::kShapeMismatch, "l1: layout rows");
  L1Value<S> out;
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const auto base = static_cast<Eigen::Index>(layout.offset(b));
    for (std::size_t t = 0; t < layout.lengths[b]; ++t) {
      const auto r = base + static_cast<Eigen::Index>(t);
      for (Eigen::Index c = 0; c < y.cols(); ++c) out.sum += std::abs(y(r, c) - x(r, c));
    }
  }
  out.frames = layout.valid_frames();
  out.per_frame = out.frames > 0 ? out.sum / static_cast<S>(out.frames) : S(0);
  return out;
}

/// Gradient of the per-frame mean w.r.t. y, scaled by `upstream`.
template <typename S>
void l1_backward(S upstream, const Mat<S>& y, const Mat<S>& x, const SeqLayout& layout, Mat<S>& dy) {
  const std::size_t frames = layout.valid_frames();
  if (frames == 0) return;
  const S scale = upstream / static_cast<S>(frames);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const auto base = static_cast<Eigen::Index>(layout.offset(b));
    for (std::size_t t = 0; t < layout.lengths[b]; ++t) {
      const auto r = base + static_cast<Eigen::Index>(t);
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        const S diff = y(r, c) - x(r, c);
        dy(r, c) += diff > S(0) ? scale : (diff < S(0) ? -scale : S(0));
      }
    }
  }
}

}  // namespace npc::ops
