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

// Receptive-field and input-mask arithmetic for a stack of L layers, each a
// k=3 ConvBlock followed by a Masked ConvBlock whose outputs are summed.
//
// A ConvBlock widens the region that carries target information by one frame
// per side, so the masked conv at layer l must hide half-width
//   m_l = (M_in - 1) / 2 + l
// around the center. With masked-conv kernel k = R - 2L at every layer the
// deepest layer reaches (k - 1) / 2 + L = (R - 1) / 2 frames per side.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npc/common.hpp"

namespace npc {

struct NpcConfig {
  int layers = 2;           // L
  int receptive_field = 23; // R, odd
  int input_mask = 5;       // M_in, odd
  int dim = 512;            // d
  int input_dim = 80;       // d_in
  int vq_groups = 4;
  int vq_codewords = 64;
  bool vq_enabled = true;
  bool masked_conv_every_layer = true;  // false: masked conv on the last layer only
};

struct MaskPlan {
  int layers = 0;
  int receptive_field = 0;
  int input_mask = 0;
  int kernel_size = 0;               // k, shared by every masked conv
  std::vector<int> mask_half_width;  // m_l for l = 1..L (index l-1)

  int input_half_width() const { return (input_mask - 1) / 2; }
  int field_half_width() const { return (receptive_field - 1) / 2; }
};

inline std::string feasibility_message(int layers, int receptive_field, int input_mask) {
  return "need (R - 2L - 1)/2 > (M_in - 1)/2 + L, got L=" + std::to_string(layers) +
         " R=" + std::to_string(receptive_field) + " M_in=" + std::to_string(input_mask) + ": " +
         std::to_string((receptive_field - 2 * layers - 1) / 2) + " <= " +
         std::to_string((input_mask - 1) / 2 + layers);
}

inline MaskPlan plan_masks(int layers, int receptive_field, int input_mask) {
  require(layers >= 1, ErrorCode::kInfeasiblePlan, "L must be >= 1");
  require(receptive_field > 0 && receptive_field % 2 == 1, ErrorCode::kInfeasiblePlan,
          "R must be a positive odd integer, got " + std::to_string(receptive_field));
  require(input_mask > 0 && input_mask % 2 == 1, ErrorCode::kInfeasiblePlan,
          "M_in must be a positive odd integer, got " + std::to_string(input_mask));
  const int k = receptive_field - 2 * layers;
  const int deepest = (input_mask - 1) / 2 + layers;
  if (k < 1 || (k - 1) / 2 <= deepest) {
    throw Error(ErrorCode::kInfeasiblePlan, feasibility_message(layers, receptive_field, input_mask));
  }
  MaskPlan plan;
  plan.layers = layers;
  plan.receptive_field = receptive_field;
  plan.input_mask = input_mask;
  plan.kernel_size = k;
  for (int l = 1; l <= layers; ++l) plan.mask_half_width.push_back((input_mask - 1) / 2 + l);
  return plan;
}

inline MaskPlan plan_masks(const NpcConfig& cfg) {
  return plan_masks(cfg.layers, cfg.receptive_field, cfg.input_mask);
}

/// D_i = 0 iff |i - (k-1)/2| <= m.
inline std::vector<std::uint8_t> build_mask(int k, int m) {
  require(k > 0 && k % 2 == 1, ErrorCode::kInvalidArgument, "mask kernel size must be odd");
  require(m >= 0 && (k - 1) / 2 > m, ErrorCode::kInvalidArgument,
          "mask half-width " + std::to_string(m) + " leaves no unmasked tap for k=" + std::to_string(k));
  std::vector<std::uint8_t> d(static_cast<std::size_t>(k));
  const int center = (k - 1) / 2;
  for (int i = 0; i < k; ++i) d[static_cast<std::size_t>(i)] = (i - center <= m && center - i <= m) ? 0 : 1;
  return d;
}

inline void validate(const NpcConfig& cfg) {
  plan_masks(cfg);
  require(cfg.dim >= 1 && cfg.input_dim >= 1, ErrorCode::kInvalidArgument, "dimensions must be positive");
  require(cfg.vq_groups >= 1 && cfg.vq_codewords >= 1, ErrorCode::kInvalidArgument, "VQ sizes must be positive");
  require(cfg.dim % cfg.vq_groups == 0, ErrorCode::kInvalidArgument,
          "d=" + std::to_string(cfg.dim) + " not divisible by vq_groups=" + std::to_string(cfg.vq_groups));
}

}  // namespace npc
