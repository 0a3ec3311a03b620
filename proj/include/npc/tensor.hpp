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

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "npc/common.hpp"

namespace npc {

/// Named parameter tensor. `data` is the row-major 2-D view: the last dim is
/// the column count and all leading dims are folded into rows, e.g. a conv
/// kernel with dims {k, d_in, d_out} is stored as (k * d_in) x d_out.
template <typename Scalar>
struct Tensor {
  std::string name;
  std::vector<std::size_t> dims;
  Mat<Scalar> data;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> d) : name(std::move(n)), dims(std::move(d)) {
    require(!dims.empty(), ErrorCode::kInvalidArgument, "tensor needs rank >= 1");
    const std::size_t cols = dims.back();
    const std::size_t rows = std::accumulate(dims.begin(), dims.end() - 1, std::size_t{1}, std::multiplies<>());
    data = Mat<Scalar>::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  }

  std::size_t size() const { return static_cast<std::size_t>(data.size()); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out;
    out.name = name;
    out.dims = dims;
    out.data = data.template cast<Other>();
    return out;
  }
};

/// Padded batch of variable-length sequences: row b * max_len + t holds frame t
/// of sequence b; rows with t >= lengths[b] are padding.
struct SeqLayout {
  std::size_t batch = 1;
  std::size_t max_len = 0;
  std::vector<std::size_t> lengths;

  static SeqLayout single(std::size_t len) { return SeqLayout{1, len, {len}}; }

  static SeqLayout uniform(std::size_t batch, std::size_t len) {
    return SeqLayout{batch, len, std::vector<std::size_t>(batch, len)};
  }

  std::size_t rows() const { return batch * max_len; }
  std::size_t offset(std::size_t b) const { return b * max_len; }
  std::size_t valid_frames() const { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }
  bool is_valid(std::size_t row) const { return row % max_len < lengths[row / max_len]; }

  void validate() const {
    require(lengths.size() == batch, ErrorCode::kShapeMismatch, "layout lengths != batch");
    for (std::size_t len : lengths) require(len <= max_len, ErrorCode::kShapeMismatch, "sequence longer than max_len");
  }
};

/// x - x is 0 for finite x and NaN otherwise; the sum vectorizes, unlike
/// Eigen's allFinite().
template <typename Scalar>
bool all_finite(const Mat<Scalar>& m) {
  return (m.array() - m.array()).sum() == Scalar(0);
}

}  // namespace npc
