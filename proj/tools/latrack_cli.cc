/* Copyright 2026 The latrack Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front end: gen, simulate, evaluate, train, compare, horizon.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latrack/kf_fit.h"
#include "latrack/pipeline.h"
#include "latrack/trainer.h"

namespace fs = std::filesystem;
using namespace latrack;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kInvalid = 2, kIo = 3, kDiverged = 4 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
  int workers = 0;
  std::string format = "csv";
};

std::string OutPath(const Globals& g, const std::string& name) {
  return (fs::path(g.out) / name).string();
}

std::ofstream OpenOut(const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

KeyValueConfig LoadOrEmpty(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::Load(path);
}

// Tracker config with its seed derived from the command seed unless given.
TrackerAdapter TrackerFrom(const std::string& path, const Globals& g,
                           RunManifest* manifest) {
  KeyValueConfig cfg = LoadOrEmpty(path);
  if (!path.empty()) manifest->AddInput(path);
  if (!cfg.has("seed")) {
    cfg.set("seed", std::to_string(SplitSeed(g.seed, "tracker")));
  }
  const TrackerAdapter t = TrackerAdapter::FromConfig(cfg);
  manifest->AddSeed("tracker", t.seed);
  return t;
}

int ResolveHorizon(const std::string& arg, const std::vector<Sequence>& seqs,
                   const TrackerAdapter& tracker, int trials) {
  if (arg == "auto") return PickHorizonAll(seqs, tracker, trials);
  const int n = std::stoi(arg);
  if (n < 1) throw ValidationError("--horizon must be >= 1 or auto");
  return n;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string spec;
  int count = 10;
};

int CmdGen(const Globals& g, const GenArgs& a) {
  RunManifest m("gen", g.seed);
  m.Stage("load");
  KeyValueConfig cfg = LoadOrEmpty(a.spec);
  if (!a.spec.empty()) m.AddInput(a.spec);
  if (!cfg.has("seed")) cfg.set("seed", std::to_string(SplitSeed(g.seed, "gen")));
  const int count = static_cast<int>(cfg.GetInt("count", a.count));
  const SyntheticSpec spec = SyntheticSpec::FromConfig(cfg);
  m.SetConfig(cfg.Canonical());
  m.AddSeed("gen", spec.seed);
  m.Stage("generate");
  const auto seqs = GenSynthetic(spec, count);
  const std::string dir = OutPath(g, "sequences");
  SaveSequences(dir, seqs);
  for (const auto& s : seqs) m.AddOutput((fs::path(dir) / (s.name + ".txt")).string());
  m.Save(OutPath(g, "manifest.json"));
  std::cout << "wrote " << seqs.size() << " sequences to " << dir << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string sequences;
  std::string tracker;
  std::string predictor = "none";
  std::string horizon = "auto";
  std::string kf_noise;
  double framerate = 30.0;
  int trials = 3;
};

int CmdSimulate(const Globals& g, const SimArgs& a) {
  RunManifest m("simulate", g.seed);
  m.Stage("load");
  const auto seqs = LoadSequences(a.sequences, a.framerate);
  m.AddInput(a.sequences);
  const TrackerAdapter tracker = TrackerFrom(a.tracker, g, &m);
  const int horizon = ResolveHorizon(a.horizon, seqs, tracker, a.trials);
  const auto predictor = MakePredictor(a.predictor, horizon, a.kf_noise);
  m.SetConfig(LoadOrEmpty(a.tracker).Canonical() + "predictor=" + a.predictor +
              "\nhorizon=" + std::to_string(horizon) + "\n");
  m.Stage("simulate");
  const auto logs = RunAll(seqs, tracker, predictor ? &*predictor : nullptr);
  m.Stage("write");
  for (const auto& log : logs) {
    const std::string lp = OutPath(g, "logs/" + log.sequence + ".csv");
    auto out = OpenOut(lp);
    WriteRunLog(out, log);
    const std::string sp = OutPath(g, "schedules/" + log.sequence + ".csv");
    auto sched = OpenOut(sp);
    WriteSchedule(sched, log);
    m.AddOutput(lp);
    m.AddOutput(sp);
  }
  m.Save(OutPath(g, "manifest.json"));
  std::cout << "simulated " << logs.size() << " sequences (horizon "
            << horizon << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string sequences;
  std::string logs;
  double framerate = 30.0;
};

int CmdEvaluate(const Globals& g, const EvalArgs& a) {
  RunManifest m("evaluate", g.seed);
  m.Stage("load");
  const auto seqs = LoadSequences(a.sequences, a.framerate);
  m.AddInput(a.sequences);
  std::vector<RunLog> logs;
  for (const auto& s : seqs) {
    const std::string path = (fs::path(a.logs) / (s.name + ".csv")).string();
    if (!fs::exists(path)) throw IoError("no run log for sequence " + s.name);
    logs.push_back(ReadRunLog(path));
    if (logs.back().sequence != s.name) {
      throw ValidationError("run log " + path + " belongs to sequence " +
                            logs.back().sequence);
    }
    m.AddInput(path);
  }
  m.Stage("sweep");
  const SweepResult r = Sweep(seqs, logs);
  m.Stage("write");
  {
    auto out = OpenOut(OutPath(g, "curves.csv"));
    WriteCurvesCsv(out, r);
    m.AddOutput(OutPath(g, "curves.csv"));
  }
  {
    auto out = OpenOut(OutPath(g, "curves.svg"));
    WriteCurvesSvg(out, r, "latency-aware evaluation");
    m.AddOutput(OutPath(g, "curves.svg"));
  }
  m.AddOutput(OutPath(g, "summary.json"));
  m.Save(OutPath(g, "manifest.json"));
  const std::string summary = SummaryJson(r, m.ToJson());
  {
    auto out = OpenOut(OutPath(g, "summary.json"));
    out << summary << '\n';
  }
  if (g.format == "json") {
    std::cout << summary << '\n';
  } else if (g.format == "md") {
    std::cout << "| Sequence | AUC@La0 | DP@La0 | mAUC | mDP |\n|---|---|---|---|---|\n";
    for (std::size_t s = 0; s < r.names.size(); ++s) {
      double ma = 0, md = 0;
      for (const auto& sc : r.per_sequence[s]) {
        ma += sc.auc;
        md += sc.dp;
      }
      const double n = static_cast<double>(r.per_sequence[s].size());
      std::cout << "| " << r.names[s] << " | " << r.per_sequence[s][0].auc
                << " | " << r.per_sequence[s][0].dp << " | " << ma / n << " | "
                << md / n << " |\n";
    }
    std::cout << "| all | " << r.auc.values[0] << " | " << r.dp.values[0]
              << " | " << r.auc.aggregate << " | " << r.dp.aggregate << " |\n";
  } else if (g.format == "svg") {
    WriteCurvesSvg(std::cout, r, "latency-aware evaluation");
  } else {
    WriteCurvesCsv(std::cout, r);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string config;
  std::string model = "pm";
  int epochs = -1;
  double framerate = 30.0;
};

int CmdTrain(const Globals& g, const TrainArgs& a) {
  RunManifest m("train", g.seed);
  m.Stage("load");
  KeyValueConfig cfg = LoadOrEmpty(a.config);
  if (!a.config.empty()) m.AddInput(a.config);
  if (a.epochs >= 0) cfg.set("epochs", std::to_string(a.epochs));
  if (!cfg.has("seed")) cfg.set("seed", std::to_string(SplitSeed(g.seed, "train")));
  m.SetConfig(cfg.Canonical() + "model=" + a.model + "\n");

  OptimizerConfig opt;
  opt.lr = cfg.GetDouble("lr", opt.lr);
  opt.epochs = static_cast<int>(cfg.GetInt("epochs", opt.epochs));
  opt.milestones = cfg.GetInts("milestones", opt.milestones);
  opt.gamma = cfg.GetDouble("gamma", opt.gamma);
  opt.batch_size = static_cast<int>(cfg.GetInt("batch", opt.batch_size));
  opt.weight_decay = cfg.GetDouble("weight_decay", opt.weight_decay);
  opt.seed = cfg.GetSeed("seed", 0);
  opt.Validate();
  m.AddSeed("train", opt.seed);

  PmConfig net;
  net.k = static_cast<int>(cfg.GetInt("k", net.k));
  net.horizon = static_cast<int>(cfg.GetInt("N", net.horizon));
  net.c_enc = static_cast<int>(cfg.GetInt("c_enc", net.c_enc));
  net.c_dec = static_cast<int>(cfg.GetInt("c_dec", net.c_dec));
  net.Validate();

  SamplerConfig sc;
  // The filter runs over a track's whole past when streaming, so its fitting
  // windows carry a longer burn-in than the network's k.
  sc.k = a.model == "kf" ? static_cast<int>(cfg.GetInt("kf_history", 15)) : net.k;
  sc.horizon = net.horizon;
  std::vector<int> def_strides;
  for (int d = 1; d <= net.horizon; ++d) def_strides.push_back(d);
  sc.strides = cfg.GetIntRange("stride_set", def_strides);
  sc.anchor_step = static_cast<int>(cfg.GetInt("anchor_step", sc.anchor_step));
  const double val_fraction = cfg.GetDouble("val_fraction", 0.1);

  const auto seqs = LoadSequences(a.corpus, a.framerate);
  m.AddInput(a.corpus);
  std::vector<Sequence> train_seqs, val_seqs;
  SplitByTrajectory(seqs, val_fraction, SplitSeed(opt.seed, "split"),
                    &train_seqs, &val_seqs);
  m.Stage("sample");
  const auto train = SampleSequences(train_seqs, sc, SplitSeed(opt.seed, "train-windows"));
  const auto val = SampleSequences(val_seqs, sc, SplitSeed(opt.seed, "val-windows"));

  m.Stage("optimize");
  std::vector<EpochRecord> history;
  std::string model_path;
  nlohmann::ordered_json report;
  if (a.model == "pm") {
    const TrainResult r = TrainPm(train, val, opt, net);
    model_path = OutPath(g, "checkpoint.json");
    fs::create_directories(g.out);
    r.weights.Save(model_path);
    history = r.history;
    report = {{"model", "pm"},
              {"best_epoch", r.best_epoch},
              {"best_val_l1", r.best_val_l1},
              {"zero_motion_val_l1", ZeroMotionL1(val)},
              {"train_samples", train.size()},
              {"val_samples", val.size()}};
  } else if (a.model == "kf") {
    const KfFitResult r = KfFitNoise(train, val, KalmanNoise::Defaults(), opt);
    model_path = OutPath(g, "noise.json");
    fs::create_directories(g.out);
    r.noise.Save(model_path);
    history = r.history;
    report = {{"model", "kf"},
              {"best_epoch", r.best_epoch},
              {"init_val_l1", r.init_val_l1},
              {"best_val_l1", r.best_val_l1},
              {"log_r_over_q", NoiseLogRatio(r.noise)},
              {"train_samples", train.size()},
              {"val_samples", val.size()}};
  } else {
    throw ValidationError("--model must be pm or kf");
  }
  m.Stage("write");
  {
    auto out = OpenOut(OutPath(g, "loss.csv"));
    WriteLossCsv(out, history);
  }
  m.AddOutput(model_path);
  m.AddOutput(OutPath(g, "loss.csv"));
  m.Save(OutPath(g, "manifest.json"));
  if (g.format == "json") {
    std::cout << report.dump(2) << '\n';
  } else {
    for (const auto& [k, v] : report.items()) std::cout << k << ": " << v << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string sequences;
  std::string tracker;
  std::vector<std::string> predictors{"none", "kf"};
  std::string horizon = "auto";
  std::string kf_noise;
  double framerate = 30.0;
  int trials = 3;
};

int CmdCompare(const Globals& g, const CompareArgs& a) {
  RunManifest m("compare", g.seed);
  m.Stage("load");
  const auto seqs = LoadSequences(a.sequences, a.framerate);
  m.AddInput(a.sequences);
  const TrackerAdapter tracker = TrackerFrom(a.tracker, g, &m);
  const int horizon = ResolveHorizon(a.horizon, seqs, tracker, a.trials);
  std::string joined;
  for (const auto& p : a.predictors) {
    joined += p + ";";
    const auto colon = p.find(':');
    if (colon != std::string::npos && fs::exists(p.substr(colon + 1))) {
      m.AddInput(p.substr(colon + 1));
    }
  }
  m.SetConfig(LoadOrEmpty(a.tracker).Canonical() + "predictors=" + joined +
              "\nhorizon=" + std::to_string(horizon) + "\n");
  m.Stage("compare");
  const auto rows = Compare(seqs, tracker, a.predictors, horizon, a.kf_noise);
  m.Stage("write");
  {
    auto out = OpenOut(OutPath(g, "compare.csv"));
    WriteCompareCsv(out, rows);
  }
  {
    auto out = OpenOut(OutPath(g, "compare.md"));
    WriteCompareMarkdown(out, rows);
  }
  m.AddOutput(OutPath(g, "compare.csv"));
  m.AddOutput(OutPath(g, "compare.md"));
  m.Save(OutPath(g, "manifest.json"));
  if (g.format == "md") {
    WriteCompareMarkdown(std::cout, rows);
  } else if (g.format == "json") {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      j.push_back({{"predictor", r.predictor},
                   {"auc_la0", r.auc_la0},
                   {"dp_la0", r.dp_la0},
                   {"mauc", r.mauc},
                   {"mdp", r.mdp},
                   {"extra_latency_ms", r.extra_latency * 1e3}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    WriteCompareCsv(std::cout, rows);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct HorizonArgs {
  std::string sequences;
  std::string tracker;
  double framerate = 30.0;
  int trials = 3;
};

int CmdHorizon(const Globals& g, const HorizonArgs& a) {
  RunManifest m("horizon", g.seed);
  const auto seqs = LoadSequences(a.sequences, a.framerate);
  m.AddInput(a.sequences);
  const TrackerAdapter tracker = TrackerFrom(a.tracker, g, &m);
  m.SetConfig(LoadOrEmpty(a.tracker).Canonical() +
              "trials=" + std::to_string(a.trials) + "\n");
  m.Stage("pre-run");
  const int n = PickHorizonAll(seqs, tracker, a.trials);
  {
    auto out = OpenOut(OutPath(g, "horizon.json"));
    out << nlohmann::ordered_json{{"horizon", n}, {"trials", a.trials}}.dump(2)
        << '\n';
  }
  m.AddOutput(OutPath(g, "horizon.json"));
  m.Save(OutPath(g, "manifest.json"));
  std::cout << n << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency-aware tracking evaluation and motion prediction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stage")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--format", g.format, "Console output format")
      ->check(CLI::IsMember({"csv", "json", "md", "svg"}))
      ->capture_default_str();

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate synthetic trajectories");
  c_gen->add_option("--spec", gen.spec, "Synthetic spec (key = value)");
  c_gen->add_option("--count", gen.count, "Number of sequences")
      ->capture_default_str();

  SimArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run the streaming simulator");
  c_sim->add_option("--sequences", sim.sequences, "Ground-truth file or directory")
      ->required();
  c_sim->add_option("--tracker", sim.tracker, "Tracker config");
  c_sim->add_option("--predictor", sim.predictor,
                    "none | zero | kf | kf_learned[:noise.json] | pm:<ckpt>")
      ->capture_default_str();
  c_sim->add_option("--horizon", sim.horizon, "N, or auto")->capture_default_str();
  c_sim->add_option("--kf-noise", sim.kf_noise, "Fitted noise for kf_learned");
  c_sim->add_option("--framerate", sim.framerate)->capture_default_str();
  c_sim->add_option("--trials", sim.trials, "Pre-runs for --horizon auto")
      ->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score run logs over the sigma grid");
  c_eval->add_option("--sequences", ev.sequences, "Ground-truth file or directory")
      ->required();
  c_eval->add_option("--logs", ev.logs, "Directory of <sequence>.csv run logs")
      ->required();
  c_eval->add_option("--framerate", ev.framerate)->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the motion predictor or fit KF noise");
  c_train->add_option("--corpus", tr.corpus, "Ground-truth file or directory")
      ->required();
  c_train->add_option("--config", tr.config, "Training config (key = value)");
  c_train->add_option("--model", tr.model, "pm or kf")
      ->check(CLI::IsMember({"pm", "kf"}))
      ->capture_default_str();
  c_train->add_option("--epochs", tr.epochs, "Override the configured epochs");
  c_train->add_option("--framerate", tr.framerate)->capture_default_str();

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Compare predictors end to end");
  c_cmp->add_option("--sequences", cmp.sequences, "Ground-truth file or directory")
      ->required();
  c_cmp->add_option("--tracker", cmp.tracker, "Tracker config");
  c_cmp->add_option("--predictors", cmp.predictors, "Comma-separated predictor list")
      ->delimiter(',')
      ->capture_default_str();
  c_cmp->add_option("--horizon", cmp.horizon, "N, or auto")->capture_default_str();
  c_cmp->add_option("--kf-noise", cmp.kf_noise, "Fitted noise for kf_learned");
  c_cmp->add_option("--framerate", cmp.framerate)->capture_default_str();
  c_cmp->add_option("--trials", cmp.trials)->capture_default_str();

  HorizonArgs hz;
  auto* c_hz = app.add_subcommand("horizon", "Pick N from tracker pre-runs");
  c_hz->add_option("--sequences", hz.sequences, "Ground-truth file or directory")
      ->required();
  c_hz->add_option("--tracker", hz.tracker, "Tracker config");
  c_hz->add_option("--framerate", hz.framerate)->capture_default_str();
  c_hz->add_option("--trials", hz.trials)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }
  if (g.workers > 0) omp_set_num_threads(g.workers);

  try {
    if (*c_gen) return CmdGen(g, gen);
    if (*c_sim) return CmdSimulate(g, sim);
    if (*c_eval) return CmdEvaluate(g, ev);
    if (*c_train) return CmdTrain(g, tr);
    if (*c_cmp) return CmdCompare(g, cmp);
    if (*c_hz) return CmdHorizon(g, hz);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
