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

#ifndef LATRACK_PIPELINE_H_
#define LATRACK_PIPELINE_H_

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latrack/kalman.h"
#include "latrack/latency_eval.h"
#include "latrack/pm_net.h"
#include "latrack/stream_sim.h"

namespace latrack {

inline constexpr const char* kVersion = "0.3.0";

// Default per-invocation predictor cost, seconds.
inline constexpr double kKfLatency = 0.001;
inline constexpr double kPmLatency = 0.005;

// Parses "none", "zero", "kf", "kf_learned[:noise.json]" or "pm:<ckpt>".
// Returns nullopt for "none". `horizon` applies to non-neural predictors;
// the network's head count fixes N for "pm".
std::optional<PredictorAdapter> MakePredictor(
    const std::string& spec, int horizon,
    const std::string& kf_noise_path = "");

// Runs every sequence (in parallel) with a per-sequence tracker seed
// derived from tracker.seed.
std::vector<RunLog> RunAll(const std::vector<Sequence>& seqs,
                           const TrackerAdapter& tracker,
                           const PredictorAdapter* predictor);

// Largest skipped-frame gap over all sequences.
int PickHorizonAll(const std::vector<Sequence>& seqs,
                   const TrackerAdapter& tracker, int trials = 3);

struct CompareRow {
  std::string predictor;
  double auc_la0 = 0.0;
  double dp_la0 = 0.0;
  double mauc = 0.0;
  double mdp = 0.0;
  double extra_latency = 0.0;  // mean seconds per predictor invocation
};

std::vector<CompareRow> Compare(const std::vector<Sequence>& seqs,
                                const TrackerAdapter& tracker,
                                const std::vector<std::string>& predictors,
                                int horizon,
                                const std::string& kf_noise_path = "");

void WriteCompareCsv(std::ostream& out, const std::vector<CompareRow>& rows);
void WriteCompareMarkdown(std::ostream& out,
                          const std::vector<CompareRow>& rows);

// Sorted *.txt ground-truth files in a directory, or a single file.
std::vector<Sequence> LoadSequences(const std::string& path,
                                    double framerate = 30.0);
void SaveSequences(const std::string& dir, const std::vector<Sequence>& seqs);

// Records what produced a set of outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed);

  void SetConfig(const std::string& canonical_text);
  void AddInput(const std::string& path);
  void AddOutput(const std::string& path);
  void AddSeed(const std::string& name, std::uint64_t seed);
  // Starts a stage; the previous stage (if any) is closed.
  void Stage(const std::string& name);

  std::string config_hash() const { return config_hash_; }
  std::string ToJson() const;
  void Save(const std::string& path);

 private:
  void CloseStage();

  std::string command_;
  std::string config_hash_ = HexDigest(Fnv1a(""));
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> stages_;
  std::string open_stage_;
  std::chrono::steady_clock::time_point stage_start_;
};

}  // namespace latrack

#endif  // LATRACK_PIPELINE_H_
