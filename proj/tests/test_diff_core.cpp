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

#include <gtest/gtest.h>

#include <cmath>

#include "npc/adam.hpp"
#include "npc/grad_check.hpp"
#include "npc/graph.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace npc {
namespace {

using testing::random_mat;

Tensor<double> random_tensor(const std::string& name, std::vector<std::size_t> dims, Rng& rng) {
  Tensor<double> t(name, std::move(dims));
  t.data = random_mat<double>(t.data.rows(), t.data.cols(), rng);
  return t;
}

TEST(Conv1d, IdentityKernel) {
  Rng rng(1);
  const Mat<double> x = random_mat<double>(5, 3, rng);
  Tensor<double> w("w", {1, 3, 3});
  w.data = Mat<double>::Identity(3, 3);
  Eager<double> g;
  EXPECT_EQ(g.conv1d(x, w, nullptr, 1, nullptr, SeqLayout::single(5)), x);
}

TEST(Conv1d, MatchesNestedLoopOracle) {
  Rng rng(2);
  for (std::size_t k : {1u, 3u, 5u, 7u}) {
    const Mat<double> x = random_mat<double>(6, 3, rng);
    auto w = random_tensor("w", {k, 3, 4}, rng);
    auto b = random_tensor("b", {4}, rng);
    Eager<double> g;
    const auto y = oracle::to_grid(g.conv1d(x, w, &b, k, nullptr, SeqLayout::single(6)));
    const auto ref = oracle::conv(oracle::to_grid(x), w, &b, nullptr);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t c = 0; c < 4; ++c) ASSERT_NEAR(y[t][c], ref[t][c], 1e-6);
  }
}

TEST(Conv1d, MaskedEqualsTapSum) {
  Rng rng(3);
  const auto mask = build_mask(7, 1);
  const Mat<double> x = random_mat<double>(9, 2, rng);
  auto w = random_tensor("w", {7, 2, 2}, rng);
  Eager<double> g;
  const auto y = oracle::to_grid(g.conv1d(x, w, nullptr, 7, &mask, SeqLayout::single(9)));
  const auto ref = oracle::conv(oracle::to_grid(x), w, static_cast<Tensor<double>*>(nullptr), &mask);
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t c = 0; c < 2; ++c) ASSERT_NEAR(y[t][c], ref[t][c], 1e-12);
}

TEST(Conv1d, PaddedBatchMatchesSingleSequences) {
  Rng rng(4);
  auto w = random_tensor("w", {3, 2, 2}, rng);
  const Mat<double> a = random_mat<double>(4, 2, rng);
  const Mat<double> b = random_mat<double>(6, 2, rng);
  SeqLayout layout{2, 6, {4, 6}};
  Mat<double> x = Mat<double>::Zero(12, 2);
  x.topRows(4) = a;
  x.middleRows(6, 6) = b;
  x.middleRows(4, 2).setConstant(99.0);  // padding garbage must not leak
  Eager<double> g;
  const auto y = g.conv1d(x, w, nullptr, 3, nullptr, layout);
  EXPECT_EQ(Mat<double>(y.topRows(4)), g.conv1d(a, w, nullptr, 3, nullptr, SeqLayout::single(4)));
  EXPECT_EQ(Mat<double>(y.middleRows(6, 6)), g.conv1d(b, w, nullptr, 3, nullptr, SeqLayout::single(6)));
}

TEST(Primitives, ReluValues) {
  Mat<double> x(1, 3);
  x << -2, 0, 3;
  Eager<double> g;
  Mat<double> expected(1, 3);
  expected << 0, 0, 3;
  EXPECT_EQ(g.relu(x), expected);
}

TEST(Primitives, ChannelNormMatchesOracle) {
  Rng rng(5);
  const Mat<double> x = random_mat<double>(4, 6, rng, 2.0);
  auto scale = random_tensor("s", {6}, rng);
  auto shift = random_tensor("b", {6}, rng);
  Eager<double> g;
  const auto y = oracle::to_grid(g.channel_norm(x, scale, shift));
  const auto ref = oracle::norm(oracle::to_grid(x), scale, shift);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 6; ++c) ASSERT_NEAR(y[t][c], ref[t][c], 1e-12);
}

TEST(Primitives, ShapeMismatchAndNonFinite) {
  Eager<double> g;
  EXPECT_THROW(g.add(Mat<double>::Zero(2, 2), Mat<double>::Zero(2, 3)), Error);
  Tensor<double> w("w", {2, 2});
  w.data.setConstant(std::numeric_limits<double>::infinity());
  try {
    g.affine(Mat<double>::Ones(1, 2), w, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Backward, SumRelu) {
  Tape<double> t;
  Mat<double> xv(1, 2);
  xv << -1, 2;
  auto x = t.input(xv);
  auto loss = t.sum(t.relu(x));
  t.backward(loss);
  EXPECT_EQ(t.grad(x)(0, 0), 0.0);
  EXPECT_EQ(t.grad(x)(0, 1), 1.0);
}

TEST(Backward, AbsSignRule) {
  // |w.x - c| with w.x > c: gradient w.r.t. w is x.
  Tensor<double> w("w", {3, 1});
  w.data << 1, 2, 3;
  Tensor<double> c("c", {1});
  c.data(0, 0) = -1.0;  // affine bias carries -c
  Mat<double> xv(1, 3);
  xv << 0.5, -1, 2;
  Tape<double> t;
  auto loss = t.sum(t.abs(t.affine(t.input(xv), w, &c)));
  t.backward(loss);
  const Mat<double> gw = t.param_grad(w);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(gw(i, 0), xv(0, i));
}

TEST(Backward, NonScalarRootAndUnreachable) {
  Tape<double> t;
  auto x = t.input(Mat<double>::Ones(2, 2));
  try {
    t.backward(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonScalarRoot);
  }
  Tensor<double> unused("u", {3});
  auto other = t.input(Mat<double>::Ones(1, 1));
  t.backward(t.sum(x));
  EXPECT_TRUE(t.param_grad(unused).isZero(0));
  EXPECT_TRUE(t.grad(other).isZero(0));
}

TEST(GradCheck, LinearLayer) {
  Rng rng(6);
  auto w = random_tensor("w", {4, 3}, rng);
  auto b = random_tensor("b", {3}, rng);
  const Mat<double> x = random_mat<double>(5, 4, rng);
  const auto res = grad_check({&w, &b}, [&](Tape<double>& t) { return t.sum(t.affine(t.input(x), w, &b)); }, 1e-5);
  EXPECT_LT(res.max_rel_error, 1e-7) << res.worst_param;
}

TEST(GradCheck, RandomTwoLayerNetProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t din = 2 + rng.index(4), dh = 2 + rng.index(6), T = 3 + rng.index(6);
    const std::size_t k = 2 * rng.index(3) + 1;
    auto w1 = random_tensor("w1", {k, din, dh}, rng);
    auto b1 = random_tensor("b1", {dh}, rng);
    auto s1 = random_tensor("s1", {dh}, rng);
    auto h1 = random_tensor("h1", {dh}, rng);
    auto w2 = random_tensor("w2", {dh, din}, rng);
    auto b2 = random_tensor("b2", {din}, rng);
    const Mat<double> x = random_mat<double>(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(din), rng);
    const auto layout = SeqLayout::single(T);
    const auto res = grad_check(
        {&w1, &b1, &s1, &h1, &w2, &b2},
        [&](Tape<double>& t) {
          auto in = t.input(x);
          auto z = t.relu(t.channel_norm(t.conv1d(in, w1, &b1, k, nullptr, layout), s1, h1));
          return t.l1(t.affine(z, w2, &b2), in, layout).per_frame;
        },
        1e-5, kGradCheckFloor);
    ASSERT_LT(res.max_rel_error, 1e-4) << "trial " << trial << " " << res.worst_param << "[" << res.worst_index
                                       << "] " << res.analytic << " vs " << res.numeric << " dh=" << dh;
  }
}

TEST(GradCheck, MaskedTapsHaveExactlyZeroGradient) {
  Rng rng(8);
  const auto mask = build_mask(7, 2);
  auto w = random_tensor("w", {7, 3, 3}, rng);
  const Mat<double> x = random_mat<double>(10, 3, rng);
  Tape<double> t;
  auto loss = t.sum(t.relu(t.conv1d(t.input(x), w, nullptr, 7, &mask, SeqLayout::single(10))));
  t.backward(loss);
  const Mat<double> gw = t.param_grad(w);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto block = gw.middleRows(static_cast<Eigen::Index>(i * 3), 3);
    if (mask[i] == 0) {
      EXPECT_TRUE(block.isZero(0)) << "tap " << i;
    } else {
      EXPECT_FALSE(block.isZero(0)) << "tap " << i;
    }
  }
}

TEST(Vq, SaturatedLogitSelectsCodeword) {
  Mat<double> logits = Mat<double>::Zero(1, 8);
  logits(0, 2) = 1e6;
  logits(0, 4 + 1) = 1e6;
  Tensor<double> cb("cb", {2, 4, 3});
  Rng rng(9);
  cb.data = random_mat<double>(8, 3, rng);
  Eager<double> g;
  const auto out = g.vq(logits, cb, 2, nullptr, 1.0, ops::VqMode::kStraightThrough);
  ASSERT_EQ(out.q.cols(), 6);
  EXPECT_EQ(out.indices, (std::vector<std::int32_t>{2, 1}));
  EXPECT_NEAR(out.probs(0, 2), 1.0, 1e-12);
  EXPECT_EQ(Mat<double>(out.q.leftCols(3)), Mat<double>(cb.data.row(2)));
  EXPECT_EQ(Mat<double>(out.q.rightCols(3)), Mat<double>(cb.data.row(5)));
}

TEST(Vq, TiesGoToLowestIndexAndTauMustBePositive) {
  Tensor<double> cb("cb", {1, 3, 2});
  Eager<double> g;
  const auto out = g.vq(Mat<double>::Zero(1, 3), cb, 1, nullptr, 1.0, ops::VqMode::kStraightThrough);
  EXPECT_EQ(out.indices[0], 0);
  EXPECT_THROW(g.vq(Mat<double>::Zero(1, 3), cb, 1, nullptr, 0.0, ops::VqMode::kStraightThrough), Error);
}

TEST(Vq, ProbabilitiesSumToOne) {
  Rng rng(10);
  const Mat<double> logits = random_mat<double>(7, 12, rng, 3.0);
  const Mat<double> noise = sample_gumbel_noise<double>(SeqLayout::single(7), 12, rng);
  Tensor<double> cb("cb", {3, 4, 2});
  Eager<double> g;
  const auto out = g.vq(logits, cb, 3, &noise, 0.7, ops::VqMode::kStraightThrough);
  for (Eigen::Index r = 0; r < 7; ++r)
    for (int grp = 0; grp < 3; ++grp) ASSERT_NEAR(out.probs.row(r).segment(grp * 4, 4).sum(), 1.0, 1e-6);
  for (auto i : out.indices) ASSERT_TRUE(i >= 0 && i < 4);
}

TEST(Vq, StraightThroughGradients) {
  // Forward is the hard codeword; the logits gradient equals the gradient of
  // the soft path (finite differences through kSoft with the same noise).
  Rng rng(11);
  const std::size_t groups = 2, V = 3, dg = 2;
  const Mat<double> logits0 = random_mat<double>(4, groups * V, rng);
  const Mat<double> noise = sample_gumbel_noise<double>(SeqLayout::single(4), groups * V, rng);
  Tensor<double> cb("cb", {groups, V, dg});
  cb.data = random_mat<double>(groups * V, dg, rng);
  const Mat<double> probe = random_mat<double>(4, groups * dg, rng);
  const double tau = 0.8;

  Tape<double> t;
  auto l = t.input(logits0);
  auto vq = t.vq(l, cb, groups, &noise, tau, ops::VqMode::kStraightThrough);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const auto idx = vq.indices[static_cast<std::size_t>(r) * groups + grp];
      ASSERT_EQ(Mat<double>(t.value(vq.q).row(r).segment(grp * dg, dg)),
                Mat<double>(cb.data.row(static_cast<Eigen::Index>(grp * V) + idx)));
    }
  }
  auto soft_loss = [&](const Mat<double>& lv) {
    ops::VqSaved<double> saved;
    const Mat<double> q = ops::vq_forward(lv, cb.data, groups, &noise, tau, ops::VqMode::kSoft, saved);
    return (q.array() * probe.array()).sum();
  };
  // Analytic straight-through gradient with upstream = probe.
  Mat<double> dlogits = Mat<double>::Zero(4, groups * V);
  Mat<double> dcb = Mat<double>::Zero(groups * V, dg);
  ops::VqSaved<double> saved;
  ops::vq_forward(logits0, cb.data, groups, &noise, tau, ops::VqMode::kStraightThrough, saved);
  ops::vq_backward(probe, cb.data, groups, tau, ops::VqMode::kStraightThrough, saved, &dlogits, &dcb);

  std::vector<double> flat(logits0.data(), logits0.data() + logits0.size());
  const auto num = oracle::numeric_gradient(
      [&](const std::vector<double>& v) {
        Mat<double> m = Eigen::Map<const Mat<double>>(v.data(), logits0.rows(), logits0.cols());
        return soft_loss(m);
      },
      flat, 1e-6);
  for (std::size_t i = 0; i < num.size(); ++i) ASSERT_NEAR(dlogits.data()[i], num[i], 1e-6) << i;

  // Codebook gradient lands only on selected codewords.
  for (std::size_t row = 0; row < groups * V; ++row) {
    bool selected = false;
    for (Eigen::Index r = 0; r < 4; ++r) {
      const std::size_t grp = row / V;
      selected |= static_cast<std::size_t>(vq.indices[static_cast<std::size_t>(r) * groups + grp]) == row % V;
    }
    if (!selected) {
      ASSERT_TRUE(dcb.row(static_cast<Eigen::Index>(row)).isZero(0)) << row;
    }
  }
}

TEST(L1, ValuesAndPaddingExclusion) {
  Mat<double> y(2, 2), x = Mat<double>::Zero(2, 2);
  y << 1, -1, 2, 0;
  const auto v = ops::l1_forward(y, x, SeqLayout::single(2));
  EXPECT_EQ(v.sum, 4.0);
  EXPECT_EQ(v.per_frame, 2.0);

  SeqLayout padded{1, 4, {2}};
  Mat<double> yp = Mat<double>::Constant(4, 2, 50.0);
  yp.topRows(2) = y;
  const auto vp = ops::l1_forward(yp, Mat<double>(Mat<double>::Zero(4, 2)), padded);
  EXPECT_EQ(vp.sum, 4.0);
  EXPECT_EQ(vp.frames, 2u);

  Mat<double> dy = Mat<double>::Zero(4, 2);
  ops::l1_backward(1.0, yp, Mat<double>(Mat<double>::Zero(4, 2)), padded, dy);
  EXPECT_TRUE(dy.bottomRows(2).isZero(0));
  EXPECT_EQ(dy(1, 1), 0.0);  // subgradient at zero difference
}

TEST(Adam, FirstStepIsLrTimesSign) {
  Tensor<double> p("p", {3});
  p.data << 1.0, -2.0, 0.5;
  Mat<double> g(1, 3);
  g << 0.7, -3.0, 1e-2;
  AdamState<double> st;
  adam_step<double>({&p}, {g}, st);
  EXPECT_NEAR(p.data(0, 0), 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(p.data(0, 1), -2.0 + 1e-3, 1e-9);
  EXPECT_NEAR(p.data(0, 2), 0.5 - 1e-3, 1e-9);
}

TEST(Adam, ZeroGradientIsNoOp) {
  Tensor<double> p("p", {2});
  p.data << 3.0, -4.0;
  const Mat<double> before = p.data;
  AdamState<double> st;
  for (int i = 0; i < 3; ++i) adam_step<double>({&p}, {Mat<double>::Zero(1, 2)}, st);
  EXPECT_EQ(p.data, before);
}

TEST(Adam, TwoStepsByHand) {
  // Constant g = 1: m1 = 0.1, v1 = 0.001; m2 = 0.19, v2 = 0.001999.
  // Both bias-corrected ratios are exactly 1, so each step moves lr / (1 + eps).
  Tensor<double> p("p", {1});
  p.data(0, 0) = 0.0;
  AdamState<double> st;
  adam_step<double>({&p}, {Mat<double>::Ones(1, 1)}, st);
  adam_step<double>({&p}, {Mat<double>::Ones(1, 1)}, st);
  const double m2 = 0.9 * 0.1 + 0.1, v2 = 0.999 * 0.001 + 0.001;
  const double step2 = 1e-3 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  const double step1 = 1e-3 * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(p.data(0, 0), -(step1 + step2), 1e-15);
  EXPECT_THROW(adam_step<double>({&p}, {Mat<double>::Ones(1, 2)}, st), Error);
}

TEST(Determinism, ForwardBackwardBitwise) {
  Rng rng(12);
  auto w = random_tensor("w", {3, 4, 4}, rng);
  const Mat<double> x = random_mat<double>(8, 4, rng);
  auto run = [&]() {
    Tape<double> t;
    auto in = t.input(x);
    auto loss = t.l1(t.relu(t.conv1d(in, w, nullptr, 3, nullptr, SeqLayout::single(8))), in, SeqLayout::single(8));
    t.backward(loss.per_frame);
    return std::make_pair(t.value(loss.per_frame), t.param_grad(w));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

}  // namespace
}  // namespace npc
