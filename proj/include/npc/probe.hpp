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
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "npc/common.hpp"
#include "npc/config.hpp"
#include "npc/rng.hpp"

namespace npc {

enum class ProbeTask { kFramewise, kUtteranceMean };

inline std::string to_string(ProbeTask t) { return t == ProbeTask::kFramewise ? "frame" : "speaker"; }

/// One utterance of frozen representations with its labels.
struct LabeledUtterance {
  Mat<float> reps;          // T x d
  std::vector<int> frames;  // per-frame class, framewise task
  int utterance_label = -1; // utterance-mean task
};

struct ProbeConfig {
  double lr = 1e-3;
  int max_epochs = 100;
  int patience = 10;
  int batch_size = 256;            // rows per step, framewise task
  int utterance_batch_size = 16;   // rows per step, utterance-mean task
  double train_frac = 0.8;
  double valid_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(lr > 0 && max_epochs >= 1 && patience >= 1 && batch_size >= 1 && utterance_batch_size >= 1, ErrorCode::kConfig, "probe parameters");
    require(train_frac > 0 && valid_frac > 0 && train_frac + valid_frac < 1, ErrorCode::kConfig, "probe split fractions");
  }
};

inline KeyValues to_key_values(const ProbeConfig& c) {
  return {{"probe_lr", format_number(c.lr)},
          {"probe_max_epochs", std::to_string(c.max_epochs)},
          {"probe_patience", std::to_string(c.patience)},
          {"probe_batch_size", std::to_string(c.batch_size)},
          {"probe_utterance_batch_size", std::to_string(c.utterance_batch_size)},
          {"probe_train_frac", format_number(c.train_frac)},
          {"probe_valid_frac", format_number(c.valid_frac)},
          {"probe_seed", std::to_string(c.seed)}};
}

inline ProbeConfig probe_config_from(const KeyValues& kv, ProbeConfig c = {}) {
  ConfigReader r(kv);
  c.lr = r.get_double("probe_lr", c.lr);
  c.max_epochs = static_cast<int>(r.get_int("probe_max_epochs", c.max_epochs));
  c.patience = static_cast<int>(r.get_int("probe_patience", c.patience));
  c.batch_size = static_cast<int>(r.get_int("probe_batch_size", c.batch_size));
  c.utterance_batch_size = static_cast<int>(r.get_int("probe_utterance_batch_size", c.utterance_batch_size));
  c.train_frac = r.get_double("probe_train_frac", c.train_frac);
  c.valid_frac = r.get_double("probe_valid_frac", c.valid_frac);
  c.seed = static_cast<std::uint64_t>(r.get_int("probe_seed", static_cast<long long>(c.seed)));
  return c;
}

/// Affine classifier over standardized inputs: logits = ((x - mean) / scale) W + b.
struct LinearProbe {
  ProbeTask task = ProbeTask::kFramewise;
  int classes = 0;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  Mat<double> w;  // d x C
  Eigen::RowVectorXd b;

  /// Argmax class per row; ties go to the lowest index.
  std::vector<int> predict(const Mat<double>& x) const {
    require(x.cols() == w.rows(), ErrorCode::kShapeMismatch,
            "probe expects d=" + std::to_string(w.rows()) + ", got " + std::to_string(x.cols()));
    Mat<double> z = ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix() * w;
    z.rowwise() += b;
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < z.cols(); ++c)
        if (z(r, c) > z(r, best)) best = c;
      out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
  }
};

/// Design matrix and labels for the given utterances.
struct ProbeData {
  Mat<double> x;
  std::vector<int> y;
};

inline ProbeData assemble(const std::vector<LabeledUtterance>& data, const std::vector<std::size_t>& which,
                          ProbeTask task) {
  ProbeData out;
  if (which.empty()) return out;
  const Eigen::Index d = data[which.front()].reps.cols();
  Eigen::Index rows = 0;
  for (auto i : which) rows += task == ProbeTask::kFramewise ? data[i].reps.rows() : 1;
  out.x.resize(rows, d);
  Eigen::Index r = 0;
  for (auto i : which) {
    const auto& u = data[i];
    require(u.reps.cols() == d, ErrorCode::kShapeMismatch, "representation dims differ across utterances");
    if (task == ProbeTask::kFramewise) {
      require(u.frames.size() == static_cast<std::size_t>(u.reps.rows()), ErrorCode::kShapeMismatch,
              "label count " + std::to_string(u.frames.size()) + " != frames " + std::to_string(u.reps.rows()));
      out.x.middleRows(r, u.reps.rows()) = u.reps.cast<double>();
      out.y.insert(out.y.end(), u.frames.begin(), u.frames.end());
      r += u.reps.rows();
    } else {
      require(u.reps.rows() >= 1, ErrorCode::kShapeMismatch, "empty utterance");
      out.x.row(r++) = u.reps.cast<double>().colwise().mean();
      out.y.push_back(u.utterance_label);
    }
  }
  return out;
}

inline double error_rate(const std::vector<int>& pred, const std::vector<int>& truth) {
  require(pred.size() == truth.size(), ErrorCode::kShapeMismatch, "prediction/label count");
  if (truth.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += pred[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

/// Fraction misclassified.
inline double evaluate(const LinearProbe& probe, const ProbeData& data) {
  return error_rate(probe.predict(data.x), data.y);
}

struct ProbeSplit {
  std::vector<std::size_t> train, valid, test;
};

/// Seeded utterance-level split.
inline ProbeSplit split_utterances(std::size_t n, const ProbeConfig& cfg) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = Rng(cfg.seed).fork(11);
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_frac * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::lround(cfg.valid_frac * static_cast<double>(n)));
  ProbeSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)));
  s.valid.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.train.size()),
                 idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, s.train.size() + n_valid)));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.train.size() + s.valid.size()), idx.end());
  return s;
}

struct ProbeResult {
  LinearProbe probe;
  double train_err = 0, valid_err = 0, test_err = 0;
  int epochs_run = 0;
};

/// Multinomial logistic regression by minibatch Adam on train rows, keeping
/// the parameters with the lowest validation error (earliest on ties) and
/// stopping after `patience` epochs without improvement.
inline LinearProbe fit_probe(const ProbeData& train, const ProbeData& valid, ProbeTask task, const ProbeConfig& cfg,
                             int* epochs_run = nullptr) {
  cfg.validate();
  require(train.x.rows() > 0, ErrorCode::kSingleClass, "empty training split");
  const std::set<int> present(train.y.begin(), train.y.end());
  require(present.size() >= 2, ErrorCode::kSingleClass,
          "probe needs >= 2 classes in the training split, found " + std::to_string(present.size()));
  require(*present.begin() >= 0, ErrorCode::kData, "negative class label");
  int classes = *present.rbegin() + 1;
  for (int v : valid.y) classes = std::max(classes, v + 1);
  const Eigen::Index d = train.x.cols();
  const Eigen::Index C = classes;

  LinearProbe p;
  p.task = task;
  p.classes = classes;
  p.mean = train.x.colwise().mean();
  p.scale = ((train.x.rowwise() - p.mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index c = 0; c < d; ++c)
    if (p.scale[c] < 1e-8) p.scale[c] = 1.0;
  p.w = Mat<double>::Zero(d, C);
  p.b = Eigen::RowVectorXd::Zero(C);
  const Mat<double> xs = ((train.x.rowwise() - p.mean).array().rowwise() / p.scale.array()).matrix();

  Mat<double> mw = Mat<double>::Zero(d, C), vw = Mat<double>::Zero(d, C);
  Eigen::RowVectorXd mb = Eigen::RowVectorXd::Zero(C), vb = Eigen::RowVectorXd::Zero(C);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;

  const auto batch = static_cast<std::size_t>(task == ProbeTask::kFramewise ? cfg.batch_size : cfg.utterance_batch_size);
  Rng rng = Rng(cfg.seed).fork(12);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(xs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  LinearProbe best = p;
  double best_err = valid.x.rows() > 0 ? evaluate(p, valid) : 1.0;
  int since_best = 0, epoch = 0;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const auto B = static_cast<Eigen::Index>(stop - start);
      Mat<double> xb(B, d);
      for (Eigen::Index i = 0; i < B; ++i) xb.row(i) = xs.row(order[start + static_cast<std::size_t>(i)]);
      Mat<double> z = xb * p.w;
      z.rowwise() += p.b;
      for (Eigen::Index i = 0; i < B; ++i) {
        const double zmax = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - zmax).exp().matrix();
        z.row(i) /= z.row(i).sum();
        z(i, train.y[static_cast<std::size_t>(order[start + static_cast<std::size_t>(i)])]) -= 1.0;
      }
      z /= static_cast<double>(B);
      const Mat<double> gw = xb.transpose() * z;
      const Eigen::RowVectorXd gb = z.colwise().sum();
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      mw = b1 * mw + (1 - b1) * gw;
      vw = b2 * vw + (1 - b2) * gw.cwiseProduct(gw);
      mb = b1 * mb + (1 - b1) * gb;
      vb = b2 * vb + (1 - b2) * gb.cwiseProduct(gb);
      p.w.array() -= cfg.lr * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
      p.b.array() -= cfg.lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
    }
    const double err = valid.x.rows() > 0 ? evaluate(p, valid) : 0.0;
    if (err < best_err) {
      best_err = err;
      best = p;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (epochs_run) *epochs_run = std::min(epoch, cfg.max_epochs);
  return best;
}

/// Split, fit and score one task.
inline ProbeResult run_probe(const std::vector<LabeledUtterance>& data, ProbeTask task, const ProbeConfig& cfg) {
  require(!data.empty(), ErrorCode::kData, "no utterances to probe");
  const ProbeSplit split = split_utterances(data.size(), cfg);
  const ProbeData tr = assemble(data, split.train, task);
  const ProbeData va = assemble(data, split.valid, task);
  const ProbeData te = assemble(data, split.test, task);
  ProbeResult res;
  res.probe = fit_probe(tr, va, task, cfg, &res.epochs_run);
  res.train_err = evaluate(res.probe, tr);
  res.valid_err = va.x.rows() ? evaluate(res.probe, va) : 0.0;
  res.test_err = te.x.rows() ? evaluate(res.probe, te) : 0.0;
  return res;
}

struct ProbeRow {
  std::string task;
  std::string representation;
  double train_err = 0, valid_err = 0, test_err = 0;
  std::uint64_t seed = 0;
};

inline std::string probe_results_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream out;
  out << "task,representation,train_err,valid_err,test_err,seed\n";
  for (const auto& r : rows) {
    out << r.task << ',' << r.representation << ',' << format_number(r.train_err) << ','
        << format_number(r.valid_err) << ',' << format_number(r.test_err) << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace npc
