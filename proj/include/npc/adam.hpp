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
#include <cstdint>
#include <vector>

#include "npc/common.hpp"
#include "npc/tensor.hpp"

namespace npc {

template <typename S>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Mat<S>> m;
  std::vector<Mat<S>> v;
};

/// Bias-corrected Adam update, applied in place. Moments are allocated lazily
/// on the first call to match the parameter shapes.
template <typename S>
void adam_step(const std::vector<Tensor<S>*>& params, const std::vector<Mat<S>>& grads, AdamState<S>& state) {
  require(params.size() == grads.size(), ErrorCode::kShapeMismatch, "adam: parameter/gradient count");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Mat<S>::Zero(p->data.rows(), p->data.cols()));
      state.v.push_back(Mat<S>::Zero(p->data.rows(), p->data.cols()));
    }
  }
  require(state.m.size() == params.size(), ErrorCode::kShapeMismatch, "adam: state size");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].rows() == params[i]->data.rows() && grads[i].cols() == params[i]->data.cols() &&
                state.m[i].rows() == grads[i].rows() && state.m[i].cols() == grads[i].cols(),
            ErrorCode::kShapeMismatch, "adam: shape of " + params[i]->name);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const S b1 = static_cast<S>(state.beta1);
  const S b2 = static_cast<S>(state.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(state.beta1, t));
  const S c2 = static_cast<S>(1.0 - std::pow(state.beta2, t));
  const S lr = static_cast<S>(state.lr);
  const S eps = static_cast<S>(state.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    params[i]->data.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

}  // namespace npc
