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

#include "latrack/pipeline.h"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "json.hpp"

namespace latrack {

namespace fs = std::filesystem;

std::optional<PredictorAdapter> MakePredictor(
    const std::string& spec, int horizon, const std::string& kf_noise_path) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "none") return std::nullopt;

  PredictorAdapter p;
  p.name = kind;
  p.horizon = horizon;
  if (kind == "zero") {
    p.make = [] { return std::make_unique<ZeroMotionPredictor>(); };
  } else if (kind == "kf") {
    p.latency = LatencyProfile::Constant(kKfLatency);
    p.make = [] {
      return std::make_unique<KalmanPredictor>(KalmanNoise::Defaults());
    };
  } else if (kind == "kf_learned") {
    const std::string path = arg.empty() ? kf_noise_path : arg;
    if (path.empty()) {
      throw ValidationError("kf_learned needs a fitted noise file");
    }
    const KalmanNoise noise = KalmanNoise::Load(path);
    p.latency = LatencyProfile::Constant(kKfLatency);
    p.make = [noise] {
      return std::make_unique<KalmanPredictor>(noise, "kf_learned");
    };
  } else if (kind == "pm") {
    if (arg.empty()) throw ValidationError("pm needs a checkpoint: pm:<path>");
    if (!fs::exists(arg)) throw IoError("missing checkpoint: " + arg);
    const PmWeights weights = PmWeights::Load(arg);
    p.horizon = weights.config().horizon;
    p.latency = LatencyProfile::Constant(kPmLatency);
    p.make = [weights] { return std::make_unique<NeuralPredictor>(weights); };
  } else {
    throw ValidationError("unknown predictor: " + spec);
  }
  return p;
}

std::vector<RunLog> RunAll(const std::vector<Sequence>& seqs,
                           const TrackerAdapter& tracker,
                           const PredictorAdapter* predictor) {
  std::vector<RunLog> logs(seqs.size());
  std::vector<std::exception_ptr> errors(seqs.size());
  const long long n = static_cast<long long>(seqs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      TrackerAdapter t = tracker;
      if (t.behavior == TrackerBehavior::kOracleNoisy) {
        t.seed = SplitSeed(tracker.seed, u);
        t.latency.seed = SplitSeed(tracker.latency.seed, u);
      }
      logs[u] = RunStream(seqs[u], t, predictor);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return logs;
}

int PickHorizonAll(const std::vector<Sequence>& seqs,
                   const TrackerAdapter& tracker, int trials) {
  int n = 1;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    TrackerAdapter t = tracker;
    if (t.behavior == TrackerBehavior::kOracleNoisy) {
      t.seed = SplitSeed(tracker.seed, i);
      t.latency.seed = SplitSeed(tracker.latency.seed, i);
    }
    n = std::max(n, PickHorizon(seqs[i], t, trials));
  }
  return n;
}

std::vector<CompareRow> Compare(const std::vector<Sequence>& seqs,
                                const TrackerAdapter& tracker,
                                const std::vector<std::string>& predictors,
                                int horizon,
                                const std::string& kf_noise_path) {
  if (predictors.empty()) {
    throw ValidationError("compare needs at least one predictor");
  }
  std::vector<CompareRow> rows;
  for (const auto& spec : predictors) {
    const auto adapter = MakePredictor(spec, horizon, kf_noise_path);
    const auto logs = RunAll(seqs, tracker, adapter ? &*adapter : nullptr);
    const SweepResult sweep = Sweep(seqs, logs);
    CompareRow row;
    row.predictor = spec;
    row.auc_la0 = sweep.auc.values.front();
    row.dp_la0 = sweep.dp.values.front();
    row.mauc = sweep.auc.aggregate;
    row.mdp = sweep.dp.aggregate;
    double total = 0.0;
    std::size_t calls = 0;
    for (const auto& log : logs) {
      total += log.predictor_latency_total;
      calls += log.predictor_invocations;
    }
    row.extra_latency = calls ? total / static_cast<double>(calls) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void WriteCompareCsv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "predictor,auc_la0,dp_la0,mauc,mdp,extra_latency_ms\n"
      << std::fixed;
  for (const auto& r : rows) {
    out << r.predictor << ',' << std::setprecision(6) << r.auc_la0 << ','
        << r.dp_la0 << ',' << r.mauc << ',' << r.mdp << ','
        << std::setprecision(3) << r.extra_latency * 1e3 << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void WriteCompareMarkdown(std::ostream& out,
                          const std::vector<CompareRow>& rows) {
  out << "| Predictor | AUC@La0 | DP@La0 | mAUC | mDP | Extra latency (ms) |\n"
      << "|---|---|---|---|---|---|\n"
      << std::fixed;
  for (const auto& r : rows) {
    out << "| " << r.predictor << " | " << std::setprecision(3) << r.auc_la0
        << " | " << r.dp_la0 << " | " << r.mauc << " | " << r.mdp << " | "
        << std::setprecision(2) << r.extra_latency * 1e3 << " |\n";
  }
  out.unsetf(std::ios::floatfield);
}

std::vector<Sequence> LoadSequences(const std::string& path, double framerate) {
  const FrameClock clock(framerate);
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") {
        files.push_back(e.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw IoError("no such sequence path: " + path);
  }
  if (files.empty()) throw IoError("no ground-truth files under " + path);
  std::vector<Sequence> seqs;
  for (const auto& f : files) {
    seqs.push_back(ReadGroundTruth(f, clock));
    seqs.back().Validate();
  }
  return seqs;
}

void SaveSequences(const std::string& dir, const std::vector<Sequence>& seqs) {
  fs::create_directories(dir);
  for (const auto& s : seqs) {
    WriteGroundTruth((fs::path(dir) / (s.name + ".txt")).string(), s);
  }
}

RunManifest::RunManifest(std::string command, std::uint64_t seed)
    : command_(std::move(command)) {
  seeds_.emplace_back("seed", seed);
}

void RunManifest::SetConfig(const std::string& canonical_text) {
  config_hash_ = HexDigest(Fnv1a(canonical_text));
}

void RunManifest::AddInput(const std::string& path) {
  inputs_.emplace_back(path, fs::is_regular_file(path) ? FileDigest(path)
                                                       : std::string("dir"));
}

void RunManifest::AddOutput(const std::string& path) {
  outputs_.push_back(path);
}

void RunManifest::AddSeed(const std::string& name, std::uint64_t seed) {
  seeds_.emplace_back(name, seed);
}

void RunManifest::CloseStage() {
  if (open_stage_.empty()) return;
  const auto dt = std::chrono::steady_clock::now() - stage_start_;
  stages_.emplace_back(open_stage_,
                       std::chrono::duration<double>(dt).count());
  open_stage_.clear();
}

void RunManifest::Stage(const std::string& name) {
  CloseStage();
  open_stage_ = name;
  stage_start_ = std::chrono::steady_clock::now();
}

std::string RunManifest::ToJson() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["version"] = kVersion;
  j["config_hash"] = config_hash_;
  auto& seeds = j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds_) seeds[k] = v;
  auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, d] : inputs_) inputs.push_back({{"path", p}, {"digest", d}});
  j["outputs"] = outputs_;
  auto& stages = j["stages"] = nlohmann::ordered_json::array();
  for (const auto& [name, secs] : stages_) {
    stages.push_back({{"name", name}, {"wall_seconds", secs}});
  }
  return j.dump(2);
}

void RunManifest::Save(const std::string& path) {
  CloseStage();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << ToJson() << '\n';
}

}  // namespace latrack
