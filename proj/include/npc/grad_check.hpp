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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "npc/graph.hpp"
#include "npc/model.hpp"

namespace npc {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Builds the scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Tape<double>::Var(Tape<double>&)>;

/// Denominator floor used by the test suite. Central differences at h = 1e-5
/// carry roundoff of 1e-11 to 1e-10 (a few ulp(loss) / 2h), so a smaller floor
/// turns an exactly-zero analytic gradient (common under L1 sign balance) into
/// error 1. With this floor, entries below 1e-5 are held to |a - n| < 1e-9.
inline constexpr double kGradCheckFloor = 1e-5;

/// Compares tape gradients against central differences for every entry of
/// every parameter: max |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check(const std::vector<Tensor<double>*>& params, const LossBuilder& build, double h,
                                  double floor = 1e-12) {
  Tape<double> tape;
  const auto root = build(tape);
  tape.backward(root);
  std::vector<Mat<double>> analytic;
  for (auto* p : params) analytic.push_back(tape.param_grad(*p));

  auto eval = [&build]() {
    Tape<double> t;
    return t.value(build(t))(0, 0);
  };

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& data = params[k]->data;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      double& w = data.data()[i];
      const double orig = w;
      w = orig + h;
      const double up = eval();
      w = orig - h;
      const double down = eval();
      w = orig;
      const double num = (up - down) / (2.0 * h);
      const double ana = analytic[k].data()[i];
      const double err = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      ++res.checked;
      if (err > res.max_rel_error) {
        res = GradCheckResult{err, params[k]->name, static_cast<std::size_t>(i), ana, num, res.checked};
      }
    }
  }
  return res;
}

/// Full stack check: encode -> soft VQ with frozen noise and temperature -> predict -> L1.
inline GradCheckResult grad_check_npc(NpcModel<double>& model, const Mat<double>& x, const Mat<double>* noise,
                                      double tau, double h, double floor = kGradCheckFloor) {
  const SeqLayout layout = SeqLayout::single(static_cast<std::size_t>(x.rows()));
  LossBuilder build = [&](Tape<double>& t) {
    auto in = t.input(x);
    return npc_forward(t, model, in, layout, noise, tau, ops::VqMode::kSoft).loss.per_frame;
  };
  return grad_check(model.parameters(), build, h, floor);
}

}  // namespace npc
