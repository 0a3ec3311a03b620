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

// Command-line front end. Every command resolves one flat key=value config
// from --config, --set and flags, and writes it as config.txt next to its
// artifacts.
//
// Exit codes: 0 ok, 1 config error, 2 data error, 3 non-finite loss,
// 4 audit certificate failed, 5 internal error.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npc/auditor.hpp"
#include "npc/bench.hpp"
#include "npc/checkpoint.hpp"
#include "npc/config.hpp"
#include "npc/pipeline.hpp"
#include "npc/probe.hpp"
#include "npc/toy_corpus.hpp"
#include "npc/trainer.hpp"

namespace npc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNonFinite = 3;
inline constexpr int kExitAuditFailed = 4;
inline constexpr int kExitInternal = 5;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInfeasiblePlan:
    case ErrorCode::kInvalidArgument:
      return kExitConfig;
    case ErrorCode::kNonFinite:
      return kExitNonFinite;
    case ErrorCode::kNonScalarRoot:
      return kExitInternal;
    default:
      return kExitData;
  }
}

// ---------------------------------------------------------------------------
// Config sections

inline KeyValues to_key_values(const FrameParams& p, NormMode norm) {
  return {{"window_ms", format_number(p.window_ms)},
          {"hop_ms", format_number(p.hop_ms)},
          {"n_mels", std::to_string(p.n_mels)},
          {"fft_size", std::to_string(p.fft_size)},
          {"norm", norm == NormMode::kSpeaker ? "speaker" : "utterance"}};
}

inline FrameParams frame_params_from(const KeyValues& kv) {
  ConfigReader r(kv);
  FrameParams p;
  p.window_ms = r.get_double("window_ms", p.window_ms);
  p.hop_ms = r.get_double("hop_ms", p.hop_ms);
  p.n_mels = static_cast<int>(r.get_int("n_mels", p.n_mels));
  p.fft_size = static_cast<int>(r.get_int("fft_size", p.fft_size));
  return p;
}

struct AuditConfig {
  int inputs = 5;      // random input sequences
  int positions = 10;  // random t per input
  int frames = 64;     // T of each input
  int trials = 3;      // in-mask perturbation draws per position
  int seeds = 2;       // single-frame perturbation draws per position

  void validate() const {
    require(inputs >= 1 && positions >= 1 && frames >= 1 && trials >= 1 && seeds >= 1, ErrorCode::kConfig,
            "audit counts must be positive");
  }
};

inline KeyValues to_key_values(const AuditConfig& c) {
  return {{"audit_inputs", std::to_string(c.inputs)},
          {"audit_positions", std::to_string(c.positions)},
          {"audit_frames", std::to_string(c.frames)},
          {"audit_trials", std::to_string(c.trials)},
          {"audit_seeds", std::to_string(c.seeds)}};
}

inline AuditConfig audit_config_from(const KeyValues& kv) {
  ConfigReader r(kv);
  AuditConfig c;
  c.inputs = static_cast<int>(r.get_int("audit_inputs", c.inputs));
  c.positions = static_cast<int>(r.get_int("audit_positions", c.positions));
  c.frames = static_cast<int>(r.get_int("audit_frames", c.frames));
  c.trials = static_cast<int>(r.get_int("audit_trials", c.trials));
  c.seeds = static_cast<int>(r.get_int("audit_seeds", c.seeds));
  return c;
}

struct BenchConfig {
  std::string kinds = "npc,gru,bigru,transformer";
  std::string lengths = "1000";
  int batch = 32;
  int reps = 100;
  int warmup = 3;
  BaselineSpec spec;  // kind ignored
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    ConfigReader r(KeyValues{{key, item}});
    out.push_back(static_cast<int>(r.get_int(key, 0)));
  }
  require(!out.empty(), ErrorCode::kConfig, "key '" + key + "' needs at least one value");
  return out;
}

inline KeyValues to_key_values(const BenchConfig& c) {
  return {{"bench_kinds", c.kinds},
          {"bench_T", c.lengths},
          {"bench_batch", std::to_string(c.batch)},
          {"bench_reps", std::to_string(c.reps)},
          {"bench_warmup", std::to_string(c.warmup)},
          {"bench_layers", std::to_string(c.spec.layers)},
          {"bench_input_dim", std::to_string(c.spec.input_dim)},
          {"bench_d", std::to_string(c.spec.d)},
          {"bench_heads", std::to_string(c.spec.heads)},
          {"bench_npc_receptive_field", std::to_string(c.spec.npc_receptive_field)},
          {"bench_npc_input_mask", std::to_string(c.spec.npc_input_mask)}};
}

inline BenchConfig bench_config_from(const KeyValues& kv) {
  ConfigReader r(kv);
  BenchConfig c;
  c.kinds = r.get("bench_kinds", c.kinds);
  c.lengths = r.get("bench_T", c.lengths);
  c.batch = static_cast<int>(r.get_int("bench_batch", c.batch));
  c.reps = static_cast<int>(r.get_int("bench_reps", c.reps));
  c.warmup = static_cast<int>(r.get_int("bench_warmup", c.warmup));
  c.spec.layers = static_cast<int>(r.get_int("bench_layers", c.spec.layers));
  c.spec.input_dim = static_cast<int>(r.get_int("bench_input_dim", c.spec.input_dim));
  c.spec.d = static_cast<int>(r.get_int("bench_d", c.spec.d));
  c.spec.heads = static_cast<int>(r.get_int("bench_heads", c.spec.heads));
  c.spec.npc_receptive_field = static_cast<int>(r.get_int("bench_npc_receptive_field", c.spec.npc_receptive_field));
  c.spec.npc_input_mask = static_cast<int>(r.get_int("bench_npc_input_mask", c.spec.npc_input_mask));
  return c;
}

enum Section : unsigned {
  kModel = 1u << 0,
  kTrain = 1u << 1,
  kFeatures = 1u << 2,
  kProbe = 1u << 3,
  kToy = 1u << 4,
  kAudit = 1u << 5,
  kBench = 1u << 6,
  kManifest = 1u << 7,
  kCheckpoint = 1u << 8,
};

/// Default key/values of every section, used to reject unknown keys.
inline KeyValues all_defaults() {
  KeyValues kv{{"seed", "0"}, {"threads", "1"}, {"manifest", ""}, {"checkpoint", ""}};
  for (const auto& part : {to_key_values(NpcConfig{}), to_key_values(TrainConfig{}),
                           to_key_values(FrameParams{}, NormMode::kSpeaker), to_key_values(ProbeConfig{}),
                           to_key_values(ToyCorpusConfig{}), to_key_values(AuditConfig{}),
                           to_key_values(BenchConfig{})}) {
    kv.insert(part.begin(), part.end());
  }
  return kv;
}

/// Everything a command needs, parsed from the merged key/values.
struct RunConfig {
  KeyValues raw;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  NpcConfig model;
  TrainConfig train;
  FrameParams frames;
  NormMode norm = NormMode::kSpeaker;
  ProbeConfig probe;
  ToyCorpusConfig toy;
  AuditConfig audit;
  BenchConfig bench;

  /// The resolved values of the given sections.
  KeyValues resolved(unsigned sections) const {
    KeyValues kv{{"seed", std::to_string(seed)}, {"threads", std::to_string(threads)}};
    auto merge = [&kv](const KeyValues& part) { kv.insert(part.begin(), part.end()); };
    if (sections & kModel) merge(to_key_values(model));
    if (sections & kTrain) merge(to_key_values(train));
    if (sections & kFeatures) merge(to_key_values(frames, norm));
    if (sections & kProbe) merge(to_key_values(probe));
    if (sections & kToy) merge(to_key_values(toy));
    if (sections & kAudit) merge(to_key_values(audit));
    if (sections & kBench) merge(to_key_values(bench));
    if (sections & kManifest) kv["manifest"] = manifest.string();
    if (sections & kCheckpoint) kv["checkpoint"] = checkpoint.string();
    return kv;
  }
};

inline RunConfig make_run_config(const KeyValues& kv) {
  const KeyValues known = all_defaults();
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw Error(ErrorCode::kConfig, "unknown config key '" + k + "'");
  }
  ConfigReader r(kv);
  RunConfig c;
  c.raw = kv;
  c.seed = static_cast<std::uint64_t>(r.get_int("seed", 0));
  c.threads = static_cast<int>(r.get_int("threads", 1));
  require(c.threads >= 1, ErrorCode::kConfig, "threads must be >= 1");
  c.manifest = r.get("manifest", "");
  c.checkpoint = r.get("checkpoint", "");
  c.model = npc_config_from(kv);
  c.train = train_config_from(kv);
  c.train.seed = c.seed;
  c.frames = frame_params_from(kv);
  c.norm = parse_norm_mode(r.get("norm", "speaker"));
  c.probe = probe_config_from(kv);
  if (!r.has("probe_seed")) c.probe.seed = c.seed;
  c.toy = toy_config_from(kv);
  if (!r.has("toy_seed")) c.toy.seed = c.seed;
  c.audit = audit_config_from(kv);
  c.bench = bench_config_from(kv);
  c.bench.spec.seed = c.seed;
  return c;
}

// ---------------------------------------------------------------------------
// Helpers

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file_bytes(path, text);
}

inline std::filesystem::path require_out(const RunConfig& c) {
  require(!c.out.empty(), ErrorCode::kConfig, "--out is required");
  std::filesystem::create_directories(c.out);
  return c.out;
}

inline void write_resolved(const RunConfig& c, unsigned sections) {
  write_text(c.out / "config.txt", format_key_values(c.resolved(sections)));
}

inline void require_file(const std::filesystem::path& p, const std::string& what) {
  require(!p.empty(), ErrorCode::kConfig, what + " is not set");
  if (!std::filesystem::is_regular_file(p)) throw Error(ErrorCode::kFileNotFound, what + " " + p.string());
}

inline void log_line(const std::string& s) { std::cerr << s << '\n'; }

// ---------------------------------------------------------------------------
// Commands

inline int cmd_make_toy_corpus(RunConfig& c) {
  require_out(c);
  const auto corpus = generate_toy_corpus(c.toy);
  write_toy_corpus(corpus, c.out, c.frames);
  write_resolved(c, kToy | kFeatures);
  log_line("wrote " + std::to_string(corpus.size()) + " utterances to " + c.out.string());
  return kExitOk;
}

/// Parameter init is seeded from its own stream of the run seed.
inline NpcModel<float> initial_model(const RunConfig& c) {
  return NpcModel<float>::init(c.model, Rng(c.seed).fork(31).next_u64());
}

inline int cmd_train(RunConfig& c) {
  validate(c.model);
  c.train.validate();
  require(c.model.input_dim == c.frames.n_mels, ErrorCode::kConfig,
          "input_dim=" + std::to_string(c.model.input_dim) + " must equal n_mels=" + std::to_string(c.frames.n_mels));
  require_file(c.manifest, "manifest");
  require_out(c);
  write_resolved(c, kModel | kTrain | kFeatures | kManifest);
  const auto corpus = load_corpus(c.manifest, c.frames, c.norm);
  const auto feats = corpus_features(corpus);
  NpcModel<float> model = initial_model(c);
  const KeyValues extra = c.resolved(kTrain | kFeatures);
  auto on_epoch = [&](int epoch, const NpcModel<float>& m, const TrainLog& log) {
    double sum = 0;
    int n = 0;
    for (auto it = log.records.rbegin(); it != log.records.rend() && it->epoch == epoch; ++it, ++n) {
      sum += it->loss_per_frame;
    }
    std::ostringstream msg;
    msg << "epoch " << epoch << "/" << c.train.epochs << " loss_per_frame " << (n ? sum / n : 0.0);
    log_line(msg.str());
    if (c.train.checkpoint_every > 0 && epoch % c.train.checkpoint_every == 0 && epoch < c.train.epochs) {
      char name[64];
      std::snprintf(name, sizeof(name), "model_epoch%03d.npck", epoch);
      save_checkpoint(m, c.out / name, extra);
    }
  };
  const TrainResult res = train(model, feats, c.train, on_epoch, c.out);
  save_checkpoint(model, c.out / "model.npck", extra);
  write_text(c.out / "train_log.csv", res.log.to_csv());
  std::ostringstream summary;
  summary << "initial_loss=" << format_number(res.initial_loss) << "\nfinal_loss=" << format_number(res.final_loss)
          << "\nsteps=" << res.steps << '\n';
  write_text(c.out / "train_summary.txt", summary.str());
  log_line("final per-frame loss " + format_number(res.final_loss) + " (initial " + format_number(res.initial_loss) +
           ")");
  return kExitOk;
}

inline int cmd_extract(RunConfig& c) {
  require_file(c.checkpoint, "checkpoint");
  require_file(c.manifest, "manifest");
  const auto ckpt = load_checkpoint(c.checkpoint);
  require_out(c);
  write_resolved(c, kFeatures | kManifest | kCheckpoint);
  const auto corpus = load_corpus(c.manifest, c.frames, c.norm);
  const auto reps = extract_representations(ckpt.model, corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) write_feature_file(c.out / (corpus[i].id + ".npcf"), reps[i]);
  log_line("wrote " + std::to_string(reps.size()) + " representation files to " + c.out.string());
  return kExitOk;
}

inline int cmd_probe(RunConfig& c) {
  require_file(c.manifest, "manifest");
  if (!c.checkpoint.empty()) require_file(c.checkpoint, "checkpoint");
  require_out(c);
  write_resolved(c, kFeatures | kProbe | kManifest | kCheckpoint);
  const auto corpus = load_corpus(c.manifest, c.frames, c.norm);
  std::vector<std::pair<std::string, std::vector<Mat<float>>>> reps;
  reps.emplace_back("logmel", corpus_features(corpus));
  if (!c.checkpoint.empty()) reps.emplace_back("npc", extract_representations(load_checkpoint(c.checkpoint).model, corpus));

  std::set<std::string> speakers;
  for (const auto& u : corpus) speakers.insert(u.speaker);
  std::vector<ProbeRow> rows;
  for (const auto& [name, r] : reps) {
    const auto data = probe_inputs(corpus, r);
    std::vector<ProbeTask> tasks;
    if (has_frame_labels(corpus)) tasks.push_back(ProbeTask::kFramewise);
    if (speakers.size() >= 2) tasks.push_back(ProbeTask::kUtteranceMean);
    require(!tasks.empty(), ErrorCode::kData, "no probe task: need frame labels or >= 2 speakers");
    for (ProbeTask task : tasks) {
      const ProbeResult res = run_probe(data, task, c.probe);
      rows.push_back({to_string(task), name, res.train_err, res.valid_err, res.test_err, c.probe.seed});
      log_line(to_string(task) + " probe on " + name + ": test error " + format_number(res.test_err));
    }
  }
  write_text(c.out / "probe_results.csv", probe_results_csv(rows));
  return kExitOk;
}

inline int cmd_audit(RunConfig& c) {
  c.audit.validate();
  require_out(c);
  // Without a checkpoint the audit runs on a freshly initialized model.
  NpcModel<double> m;
  if (c.checkpoint.empty()) {
    validate(c.model);
    m = initial_model(c).cast<double>();
    write_resolved(c, kAudit | kModel);
  } else {
    require_file(c.checkpoint, "checkpoint");
    m = load_checkpoint(c.checkpoint).model.cast<double>();
    write_resolved(c, kAudit | kCheckpoint);
  }
  Rng rng = Rng(c.seed).fork(41);
  std::ostringstream csv;
  bool passed = true;
  for (int i = 0; i < c.audit.inputs; ++i) {
    Mat<double> x(c.audit.frames, m.config.input_dim);
    for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = rng.normal();
    std::vector<int> positions;
    for (int p = 0; p < c.audit.positions; ++p) {
      positions.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(c.audit.frames))));
    }
    const AuditReport rep = run_audit(m, x, positions, c.audit.trials, c.audit.seeds, rng);
    passed &= rep.passed();
    std::istringstream lines(rep.to_csv());
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      if (header) {
        if (i == 0) csv << "input," << line << '\n';
        header = false;
      } else {
        csv << i << ',' << line << '\n';
      }
    }
  }
  write_text(c.out / "audit.csv", csv.str());
  log_line(passed ? "audit passed" : "audit FAILED: h_t depends on masked or out-of-field frames");
  return passed ? kExitOk : kExitAuditFailed;
}

inline int cmd_bench(RunConfig& c) {
  require_out(c);
  write_resolved(c, kBench);
  const auto lengths = parse_int_list("bench_T", c.bench.lengths);
  std::vector<BenchRecord> records;
  std::ostringstream scaling;
  scaling << "kind,d,batch,threads,slope,per_frame_cv\n";
  for (const auto& name : split_list(c.bench.kinds)) {
    BaselineSpec spec = c.bench.spec;
    spec.kind = parse_baseline_kind(name);
    const Baseline model(spec);
    std::vector<double> xs, ys, pf;
    for (int T : lengths) {
      records.push_back(bench_run(model, T, c.bench.batch, c.bench.reps, c.bench.warmup, c.threads));
      const auto& r = records.back();
      xs.push_back(T);
      ys.push_back(r.mean_ms);
      pf.push_back(r.per_frame_us);
      log_line(name + " T=" + std::to_string(T) + ": " + format_number(r.mean_ms) + " ms +- " +
               format_number(r.std_ms));
    }
    if (lengths.size() >= 3 && spec.kind != BaselineKind::kEmpty) {
      double mean = 0, ss = 0;
      for (double v : pf) mean += v;
      mean /= static_cast<double>(pf.size());
      for (double v : pf) ss += (v - mean) * (v - mean);
      const double cv = std::sqrt(ss / static_cast<double>(pf.size() - 1)) / mean;
      scaling << name << ',' << spec.d << ',' << c.bench.batch << ',' << c.threads << ','
              << format_number(log_log_slope(xs, ys)) << ',' << format_number(cv) << '\n';
    }
  }
  write_text(c.out / "bench.csv", emit_report(records));
  if (lengths.size() >= 3) write_text(c.out / "scaling.csv", scaling.str());
  write_text(c.out / "bench_notes.txt",
             "Forward passes only, random fixed-seed weights, no training.\n"
             "CPU wall-clock time; inputs generated before timing; warmup calls discarded.\n"
             "relative_to_npc = mean_ms / mean_ms of the npc row at the same T, batch and threads.\n");
  return kExitOk;
}

inline int cmd_analyze_kernels(RunConfig& c) {
  require_file(c.checkpoint, "checkpoint");
  const auto ckpt = load_checkpoint(c.checkpoint);
  require_out(c);
  write_resolved(c, kCheckpoint);
  const MagnitudeProfile prof = kernel_magnitude_profile(ckpt.model);
  write_text(c.out / "kernel_profile.csv", prof.to_csv());
  std::ostringstream summary;
  summary << "layer,mask_half_width,adjacent_is_max\n";
  for (std::size_t l = 0; l < prof.values.size(); ++l) {
    summary << prof.layers[l] << ',' << prof.mask_half_width[l] << ',' << prof.adjacent_is_max(l) << '\n';
  }
  write_text(c.out / "kernel_summary.csv", summary.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int resolve_threads(const std::optional<int>& flag, const KeyValues& kv) {
  if (flag) return *flag;
  if (const char* env = std::getenv("NPC_THREADS"); env != nullptr && *env != '\0') {
    return static_cast<int>(ConfigReader(KeyValues{{"NPC_THREADS", env}}).get_int("NPC_THREADS", 1));
  }
  return static_cast<int>(ConfigReader(kv).get_int("threads", 1));
}

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Non-autoregressive predictive coding: training, extraction, probing, audits and benchmarks", "npc"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "compute threads (falls back to NPC_THREADS)");
  app.add_option("--out", out, "output directory");
  app.add_option("--set", sets, "override one config key, key=value");

  std::string bench_kinds, bench_T;
  std::optional<int> bench_reps;
  auto* toy = app.add_subcommand("make-toy-corpus", "write a seeded synthetic corpus with frame labels");
  auto* train_cmd = app.add_subcommand("train", "train an NPC model on a manifest");
  auto* extract = app.add_subcommand("extract", "write h for every utterance of a manifest");
  auto* probe = app.add_subcommand("probe", "linear probes on log-Mel and, with a checkpoint, on h");
  auto* audit = app.add_subcommand("audit", "mask and receptive-field certificates");
  auto* bench = app.add_subcommand("bench", "forward-time comparison with GRU, bi-GRU and transformer baselines");
  auto* kernels = app.add_subcommand("analyze-kernels", "per-offset weight magnitudes of masked convolutions");
  bench->add_option("--kinds", bench_kinds, "comma list of npc,gru,bigru,transformer,empty");
  bench->add_option("--T", bench_T, "comma list of sequence lengths");
  bench->add_option("--reps", bench_reps, "timed repetitions per point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    KeyValues kv;
    if (!config_path.empty()) {
      if (!std::filesystem::is_regular_file(config_path)) {
        throw Error(ErrorCode::kConfig, "config file " + config_path + " not found");
      }
      kv = read_key_values(config_path);
      // Paths in a config file are relative to the file.
      const auto base = std::filesystem::path(config_path).parent_path();
      for (const char* key : {"manifest", "checkpoint"}) {
        auto it = kv.find(key);
        if (it != kv.end() && !it->second.empty() && std::filesystem::path(it->second).is_relative() && !base.empty()) {
          it->second = (base / it->second).string();
        }
      }
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kConfig, "--set expects key=value, got '" + s + "'");
      kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    if (seed) kv["seed"] = std::to_string(*seed);
    if (bench_reps) kv["bench_reps"] = std::to_string(*bench_reps);
    if (!bench_kinds.empty()) kv["bench_kinds"] = bench_kinds;
    if (!bench_T.empty()) kv["bench_T"] = bench_T;
    kv["threads"] = std::to_string(resolve_threads(threads, kv));

    RunConfig c = make_run_config(kv);
    c.out = out;
    set_compute_threads(c.threads);
    if (*toy) return cmd_make_toy_corpus(c);
    if (*train_cmd) return cmd_train(c);
    if (*extract) return cmd_extract(c);
    if (*probe) return cmd_probe(c);
    if (*audit) return cmd_audit(c);
    if (*bench) return cmd_bench(c);
    if (*kernels) return cmd_analyze_kernels(c);
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "npc: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "npc: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "npc: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace npc::cli
