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

// Two interchangeable graph front-ends over npc::ops:
//   Tape<S>  records every primitive for reverse-mode differentiation.
//   Eager<S> computes values only and frees intermediates as they go out of scope.
// Model code is written once against the shared interface.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "npc/common.hpp"
#include "npc/ops.hpp"
#include "npc/tensor.hpp"

namespace npc {

namespace detail {

template <typename S>
void check_finite(const Mat<S>& m, const char* op) {
  if (!all_finite(m)) throw Error(ErrorCode::kNonFinite, std::string("non-finite output from ") + op);
}

}  // namespace detail

template <typename Var, typename S>
struct VqResult {
  Var q;
  Mat<S> probs;
  std::vector<std::int32_t> indices;  // rows x groups
};

template <typename Var, typename S>
struct LossResult {
  Var per_frame;  // 1x1, the optimized quantity
  S sum = 0;
  std::size_t frames = 0;
};

// ---------------------------------------------------------------------------

template <typename S>
class Eager {
 public:
  using Scalar = S;
  using Var = Mat<S>;

  Var input(Mat<S> value) const { return value; }
  const Mat<S>& value(const Var& v) const { return v; }

  Var conv1d(const Var& x, const Tensor<S>& w, const Tensor<S>* bias, std::size_t k, const ops::TapMask* mask,
             const SeqLayout& layout) const {
    Mat<S> y = ops::conv1d_forward(x, w.data, bias ? &bias->data : nullptr, k, mask, layout);
    detail::check_finite(y, "conv1d");
    return y;
  }
  Var affine(const Var& x, const Tensor<S>& w, const Tensor<S>* bias) const {
    Mat<S> y = ops::affine_forward(x, w.data, bias ? &bias->data : nullptr);
    detail::check_finite(y, "affine");
    return y;
  }
  // Eager values are plain matrices, so elementwise ops on rvalues run in place.
  Var relu(Var x) const {
    x = x.cwiseMax(S(0));
    return x;
  }
  Var abs(const Var& x) const { return ops::abs_forward(x); }
  Var add(Var a, const Var& b) const {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kShapeMismatch, "add");
    a += b;
    detail::check_finite(a, "add");
    return a;
  }
  Var sum(const Var& x) const {
    Mat<S> y(1, 1);
    y(0, 0) = x.sum();
    detail::check_finite(y, "sum");
    return y;
  }
  Var channel_norm(Var x, const Tensor<S>& scale, const Tensor<S>& shift) const {
    ops::channel_norm_inplace<S>(x, scale.data, shift.data);
    detail::check_finite(x, "channel_norm");
    return x;
  }
  VqResult<Var, S> vq(const Var& logits, const Tensor<S>& codebook, std::size_t groups, const Mat<S>* noise, S tau,
                      ops::VqMode mode) const {
    ops::VqSaved<S> saved;
    VqResult<Var, S> out;
    out.q = ops::vq_forward(logits, codebook.data, groups, noise, tau, mode, saved);
    detail::check_finite(out.q, "gumbel_softmax");
    out.probs = std::move(saved.probs);
    out.indices = std::move(saved.indices);
    return out;
  }
  LossResult<Var, S> l1(const Var& y, const Var& target, const SeqLayout& layout) const {
    const auto v = ops::l1_forward(y, target, layout);
    LossResult<Var, S> out;
    out.per_frame = Mat<S>::Constant(1, 1, v.per_frame);
    out.sum = v.sum;
    out.frames = v.frames;
    detail::check_finite(out.per_frame, "l1");
    return out;
  }
};

// ---------------------------------------------------------------------------

/// Single-owner record of primitive applications. Parameter tensors referenced
/// by a tape must outlive it and stay unmodified until backward() returns.
template <typename S>
class Tape {
 public:
  using Scalar = S;
  struct Var {
    std::size_t id = 0;
  };

  Var input(Mat<S> value) { return push(std::move(value), nullptr); }
  const Mat<S>& value(const Var& v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }

  Var conv1d(const Var& x, const Tensor<S>& w, const Tensor<S>* bias, std::size_t k, const ops::TapMask* mask,
             const SeqLayout& layout) {
    Mat<S> y = ops::conv1d_forward(value(x), w.data, bias ? &bias->data : nullptr, k, mask, layout);
    detail::check_finite(y, "conv1d");
    const std::size_t xi = x.id;
    return push(std::move(y), [xi, &w, bias, k, mask, layout](Tape& t, const Mat<S>& dy) {
      ops::conv1d_backward(dy, t.nodes_[xi].value, w.data, k, mask, layout, &t.grad_slot(xi), &t.param_slot(w),
                           bias ? &t.param_slot(*bias) : nullptr);
    });
  }

  Var affine(const Var& x, const Tensor<S>& w, const Tensor<S>* bias) {
    Mat<S> y = ops::affine_forward(value(x), w.data, bias ? &bias->data : nullptr);
    detail::check_finite(y, "affine");
    const std::size_t xi = x.id;
    return push(std::move(y), [xi, &w, bias](Tape& t, const Mat<S>& dy) {
      ops::affine_backward(dy, t.nodes_[xi].value, w.data, &t.grad_slot(xi), &t.param_slot(w),
                           bias ? &t.param_slot(*bias) : nullptr);
    });
  }

  Var relu(const Var& x) {
    const std::size_t xi = x.id;
    return push(ops::relu_forward(value(x)), [xi](Tape& t, const Mat<S>& dy) {
      ops::relu_backward(dy, t.nodes_[xi].value, t.grad_slot(xi));
    });
  }

  Var abs(const Var& x) {
    const std::size_t xi = x.id;
    return push(ops::abs_forward(value(x)), [xi](Tape& t, const Mat<S>& dy) {
      ops::abs_backward(dy, t.nodes_[xi].value, t.grad_slot(xi));
    });
  }

  Var add(const Var& a, const Var& b) {
    require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), ErrorCode::kShapeMismatch,
            "add");
    Mat<S> y = value(a) + value(b);
    detail::check_finite(y, "add");
    const std::size_t ai = a.id, bi = b.id;
    return push(std::move(y), [ai, bi](Tape& t, const Mat<S>& dy) {
      t.grad_slot(ai) += dy;
      t.grad_slot(bi) += dy;
    });
  }

  Var sum(const Var& x) {
    Mat<S> y(1, 1);
    y(0, 0) = value(x).sum();
    detail::check_finite(y, "sum");
    const std::size_t xi = x.id;
    return push(std::move(y), [xi](Tape& t, const Mat<S>& dy) { t.grad_slot(xi).array() += dy(0, 0); });
  }

  Var channel_norm(const Var& x, const Tensor<S>& scale, const Tensor<S>& shift) {
    auto saved = std::make_shared<ops::ChannelNormSaved<S>>();
    Mat<S> y = ops::channel_norm_forward(value(x), scale.data, shift.data, saved.get());
    detail::check_finite(y, "channel_norm");
    const std::size_t xi = x.id;
    return push(std::move(y), [xi, &scale, &shift, saved](Tape& t, const Mat<S>& dy) {
      ops::channel_norm_backward(dy, scale.data, *saved, &t.grad_slot(xi), &t.param_slot(scale), &t.param_slot(shift));
    });
  }

  VqResult<Var, S> vq(const Var& logits, const Tensor<S>& codebook, std::size_t groups, const Mat<S>* noise, S tau,
                      ops::VqMode mode) {
    auto saved = std::make_shared<ops::VqSaved<S>>();
    Mat<S> q = ops::vq_forward(value(logits), codebook.data, groups, noise, tau, mode, *saved);
    detail::check_finite(q, "gumbel_softmax");
    VqResult<Var, S> out;
    out.probs = saved->probs;
    out.indices = saved->indices;
    const std::size_t li = logits.id;
    out.q = push(std::move(q), [li, &codebook, groups, tau, mode, saved](Tape& t, const Mat<S>& dq) {
      ops::vq_backward(dq, codebook.data, groups, tau, mode, *saved, &t.grad_slot(li), &t.param_slot(codebook));
    });
    return out;
  }

  LossResult<Var, S> l1(const Var& y, const Var& target, const SeqLayout& layout) {
    const auto v = ops::l1_forward(value(y), value(target), layout);
    LossResult<Var, S> out;
    out.sum = v.sum;
    out.frames = v.frames;
    Mat<S> value1 = Mat<S>::Constant(1, 1, v.per_frame);
    detail::check_finite(value1, "l1");
    const std::size_t yi = y.id, xi = target.id;
    out.per_frame = push(std::move(value1), [yi, xi, layout](Tape& t, const Mat<S>& dl) {
      ops::l1_backward(dl(0, 0), t.nodes_[yi].value, t.nodes_[xi].value, layout, t.grad_slot(yi));
    });
    return out;
  }

  /// Reverse sweep from a scalar root.
  void backward(const Var& root) {
    const Mat<S>& r = value(root);
    if (r.rows() != 1 || r.cols() != 1) {
      throw Error(ErrorCode::kNonScalarRoot, "root has shape " + std::to_string(r.rows()) + "x" + std::to_string(r.cols()));
    }
    for (auto& n : nodes_) n.has_grad = false;
    param_grads_.clear();
    grad_slot(root.id)(0, 0) = S(1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
  }

  /// Gradient w.r.t. a recorded value; zero when unreachable from the root.
  Mat<S> grad(const Var& v) const {
    const Node& n = nodes_.at(v.id);
    return n.has_grad ? n.grad : Mat<S>::Zero(n.value.rows(), n.value.cols());
  }

  /// Gradient w.r.t. a parameter tensor; zero when unreachable from the root.
  Mat<S> param_grad(const Tensor<S>& p) const {
    const auto it = param_grads_.find(&p);
    return it == param_grads_.end() ? Mat<S>::Zero(p.data.rows(), p.data.cols()) : it->second;
  }

 private:
  using Backward = std::function<void(Tape&, const Mat<S>&)>;

  struct Node {
    Mat<S> value;
    Mat<S> grad;
    bool has_grad = false;
    Backward backward;
  };

  Var push(Mat<S> value, Backward bw) {
    nodes_.push_back(Node{std::move(value), Mat<S>(), false, std::move(bw)});
    return Var{nodes_.size() - 1};
  }

  Mat<S>& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
      n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  Mat<S>& param_slot(const Tensor<S>& p) {
    auto [it, inserted] = param_grads_.try_emplace(&p);
    if (inserted) it->second = Mat<S>::Zero(p.data.rows(), p.data.cols());
    return it->second;
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<S>*, Mat<S>> param_grads_;
};

}  // namespace npc
