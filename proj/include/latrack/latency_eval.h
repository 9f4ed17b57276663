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

#ifndef LATRACK_LATENCY_EVAL_H_
#define LATRACK_LATENCY_EVAL_H_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "latrack/core.h"
#include "latrack/stream_sim.h"

namespace latrack {

inline constexpr std::size_t kSigmaGridSize = 50;
inline constexpr double kDistancePrecisionPx = 20.0;
inline constexpr int kIouThresholdCount = 21;

// Permitted latency in units of one frame period, 0 <= sigma < 1.
class PermittedLatency {
 public:
  explicit PermittedLatency(double sigma = 0.0);
  double sigma() const { return sigma_; }
  double slack_seconds(const FrameClock& clock) const {
    return sigma_ * clock.period();
  }

 private:
  double sigma_;
};

// {0, 0.02, ..., 0.98}.
const std::vector<double>& SigmaGrid();

enum class MatchSource { kRaw, kPredicted, kInitial };

struct MatchedEstimate {
  FrameIndex frame = 0;
  BoundingBox estimate;
  MatchSource source = MatchSource::kInitial;
  // Only meaningful when source != kInitial.
  FrameIndex matched_target = 0;
  double matched_time = 0.0;
};

// Outputs grouped by availability instant for repeated deadline queries.
class OutputIndex {
 public:
  explicit OutputIndex(const RunLog& log);

  // Latest instant with available_at <= deadline; within it the largest
  // target <= frame, else the largest target. Falls back to the initial box.
  MatchedEstimate Match(FrameIndex frame, double deadline) const;

 private:
  struct Group {
    double time;
    std::vector<std::size_t> by_target;  // indices into outputs_, ascending
  };
  std::vector<TimedOutput> outputs_;
  std::vector<Group> groups_;
  BoundingBox initial_box_;
};

MatchedEstimate MatchElae(const RunLog& log, FrameIndex frame,
                          PermittedLatency sigma);
MatchedEstimate MatchLae(const RunLog& log, FrameIndex frame);

struct RunScore {
  double dp = 0.0;
  double auc = 0.0;
  std::size_t frames = 0;  // annotated frames scored
};

RunScore ScoreRun(const Sequence& seq, const RunLog& log,
                  PermittedLatency sigma);

// Scores precomputed per-frame estimates; missing annotations are skipped.
RunScore ScoreEstimates(const Sequence& seq,
                        const std::vector<BoundingBox>& estimates);

struct EvalCurve {
  std::vector<double> sigma_grid;
  std::vector<double> values;
  double aggregate = 0.0;
};

struct SweepResult {
  EvalCurve auc;
  EvalCurve dp;
  // [sequence][grid point]
  std::vector<std::vector<RunScore>> per_sequence;
  std::vector<std::string> names;
};

// Scores every (sequence, sigma) pair in parallel, then averages across
// sequences and the grid in a fixed order.
SweepResult Sweep(const std::vector<Sequence>& seqs,
                  const std::vector<RunLog>& logs);
// Single-threaded reference with the same reduction order.
SweepResult SweepSerial(const std::vector<Sequence>& seqs,
                        const std::vector<RunLog>& logs);

// sigma,auc,dp
void WriteCurvesCsv(std::ostream& out, const SweepResult& r);
// {mAUC, mDP, sequences: [{name, mAUC, mDP, auc_la0, dp_la0}]}
std::string SummaryJson(const SweepResult& r, const std::string& manifest = "");
void WriteCurvesSvg(std::ostream& out, const SweepResult& r,
                    const std::string& title);

}  // namespace latrack

#endif  // LATRACK_LATENCY_EVAL_H_
