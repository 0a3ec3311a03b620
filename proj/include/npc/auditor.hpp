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

// Perturbation audits of what h_t can see. Perturbations replace whole frames
// with fresh standard-normal draws; comparisons are bitwise.

#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "npc/config.hpp"
#include "npc/model.hpp"
#include "npc/rng.hpp"

namespace npc {

template <typename S>
using EncodeFn = std::function<Mat<S>(const Mat<S>&)>;

template <typename S>
void replace_frame(Mat<S>& x, Eigen::Index s, Rng& rng) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) x(s, c) = static_cast<S>(rng.normal());
}

/// Max |delta h_t| over `trials` draws that replace every frame within the
/// model's input mask around t. The contract is exactly 0.
template <typename S>
double audit_mask(const NpcModel<S>& model, const Mat<S>& x, Eigen::Index t, int trials, Rng& rng) {
  require(t >= 0 && t < x.rows(), ErrorCode::kInvalidArgument, "audit position out of range");
  const Eigen::Index half = model.plan.input_half_width();
  const Mat<S> base = model.encode(x);
  double worst = 0;
  for (int k = 0; k < trials; ++k) {
    Mat<S> xp = x;
    for (Eigen::Index s = std::max<Eigen::Index>(0, t - half); s <= std::min<Eigen::Index>(x.rows() - 1, t + half); ++s) {
      replace_frame(xp, s, rng);
    }
    const Mat<S> h = model.encode(xp);
    worst = std::max(worst, static_cast<double>((h.row(t) - base.row(t)).cwiseAbs().maxCoeff()));
  }
  return worst;
}

/// {s : replacing frame s alone changes row t of f(x)}, unioned over `seeds`
/// independent perturbation draws.
template <typename S>
std::set<int> detect_dependencies(const EncodeFn<S>& f, const Mat<S>& x, Eigen::Index t, int seeds, Rng& rng) {
  const Mat<S> base = f(x);
  std::set<int> out;
  for (int k = 0; k < seeds; ++k) {
    for (Eigen::Index s = 0; s < x.rows(); ++s) {
      if (out.count(static_cast<int>(s))) continue;
      Mat<S> xp = x;
      replace_frame(xp, s, rng);
      const Mat<S> h = f(xp);
      if (h.row(t) != base.row(t)) out.insert(static_cast<int>(s));
    }
  }
  return out;
}

template <typename S>
std::set<int> audit_receptive_field(const NpcModel<S>& model, const Mat<S>& x, Eigen::Index t, int seeds, Rng& rng) {
  EncodeFn<S> f = [&model](const Mat<S>& in) { return model.encode(in); };
  return detect_dependencies(f, x, t, seeds, rng);
}

/// {s : (M_in - 1)/2 < |s - t| <= (R - 1)/2} clipped to [0, T).
inline std::set<int> expected_dependencies(const MaskPlan& plan, int T, int t) {
  std::set<int> out;
  for (int s = 0; s < T; ++s) {
    const int dist = std::abs(s - t);
    if (dist > plan.input_half_width() && dist <= plan.field_half_width()) out.insert(s);
  }
  return out;
}

struct AuditRow {
  int t = 0;
  double mask_delta = 0;    // max |delta h_t| under in-mask perturbation
  std::set<int> detected;
  std::set<int> expected;
  bool mask_ok = false;     // mask_delta == 0
  bool locality_ok = false; // detected within the receptive field
  bool tight = false;       // detected == expected (reported)
};

struct AuditReport {
  std::vector<AuditRow> rows;
  bool passed() const {
    for (const auto& r : rows)
      if (!r.mask_ok || !r.locality_ok) return false;
    return true;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "t,mask_max_delta,detected,expected,detected_min_offset,detected_max_offset,mask_ok,locality_ok,tight\n";
    for (const auto& r : rows) {
      int lo = 0, hi = 0;
      if (!r.detected.empty()) {
        lo = *r.detected.begin() - r.t;
        hi = *r.detected.rbegin() - r.t;
      }
      out << r.t << ',' << format_number(r.mask_delta) << ',' << r.detected.size() << ',' << r.expected.size() << ','
          << lo << ',' << hi << ',' << r.mask_ok << ',' << r.locality_ok << ',' << r.tight << '\n';
    }
    return out.str();
  }
};

/// Mask and locality certificates at each probed position.
template <typename S>
AuditReport run_audit(const NpcModel<S>& model, const Mat<S>& x, const std::vector<int>& positions, int trials,
                      int seeds, Rng& rng) {
  AuditReport rep;
  const int T = static_cast<int>(x.rows());
  for (int t : positions) {
    AuditRow row;
    row.t = t;
    row.mask_delta = audit_mask(model, x, t, trials, rng);
    row.detected = audit_receptive_field(model, x, t, seeds, rng);
    row.expected = expected_dependencies(model.plan, T, t);
    row.mask_ok = row.mask_delta == 0.0;
    row.locality_ok = true;
    for (int s : row.detected) row.locality_ok &= std::abs(s - t) <= model.plan.field_half_width();
    row.tight = row.detected == row.expected;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------

/// Per masked layer: sum over channels of |W| at each tap, normalized to sum 1.
struct MagnitudeProfile {
  std::vector<int> layers;                 // 1-based layer index of each masked conv
  std::vector<int> mask_half_width;
  std::vector<ops::TapMask> masks;
  std::vector<std::vector<double>> values; // [layer][tap], tap offset = i - (k-1)/2

  /// True when, on each side, the unmasked tap next to the mask has the largest magnitude.
  bool adjacent_is_max(std::size_t layer) const {
    const auto& v = values[layer];
    const int half = static_cast<int>(v.size() / 2);
    const int m = mask_half_width[layer];
    auto at = [&](int off) { return v[static_cast<std::size_t>(off + half)]; };
    for (int sign : {-1, 1}) {
      for (int off = m + 2; off <= half; ++off)
        if (at(sign * off) > at(sign * (m + 1))) return false;
    }
    return true;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "layer,offset,magnitude,masked\n";
    for (std::size_t l = 0; l < values.size(); ++l) {
      const int half = static_cast<int>(values[l].size() / 2);
      for (std::size_t i = 0; i < values[l].size(); ++i) {
        const int off = static_cast<int>(i) - half;
        out << layers[l] << ',' << off << ',' << format_number(values[l][i]) << ','
            << (masks[l][i] == 0) << '\n';
      }
    }
    return out.str();
  }
};

template <typename S>
MagnitudeProfile kernel_magnitude_profile(const NpcModel<S>& model) {
  MagnitudeProfile p;
  for (std::size_t l = 0; l < model.masked.size(); ++l) {
    if (!model.masked[l]) continue;
    const auto& mc = *model.masked[l];
    const auto k = mc.mask.size();
    const auto cin = static_cast<Eigen::Index>(mc.w.dims[1]);
    std::vector<double> v(k, 0.0);
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      v[i] = mc.w.data.middleRows(static_cast<Eigen::Index>(i) * cin, cin).template cast<double>().cwiseAbs().sum();
      total += v[i];
    }
    if (total > 0)
      for (auto& e : v) e /= total;
    p.layers.push_back(static_cast<int>(l) + 1);
    p.mask_half_width.push_back(model.plan.mask_half_width[l]);
    p.masks.push_back(mc.mask);
    p.values.push_back(std::move(v));
  }
  return p;
}

}  // namespace npc
