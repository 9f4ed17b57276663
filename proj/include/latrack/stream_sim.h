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

#ifndef LATRACK_STREAM_SIM_H_
#define LATRACK_STREAM_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latrack/core.h"
#include "latrack/predictor.h"
#include "latrack/util.h"

namespace latrack {

enum class LatencyKind { kConstant, kGaussianTruncated, kReplay };

struct LatencyProfile {
  LatencyKind kind = LatencyKind::kConstant;
  double mean = 0.0;
  double stddev = 0.0;
  double floor = 1e-3;
  std::vector<double> replay_values;
  std::uint64_t seed = 0;

  static LatencyProfile Constant(double seconds);
  static LatencyProfile Gaussian(double mean, double stddev,
                                 std::uint64_t seed, double floor = 1e-3);
  static LatencyProfile Replay(std::vector<double> values);

  void Validate() const;

  // Keys: kind, mean, stddev, floor, seed, file (one value per line, replay).
  // `prefix` selects e.g. "tracker." or "predictor." sub-blocks.
  static LatencyProfile FromConfig(const KeyValueConfig& cfg,
                                   const std::string& prefix,
                                   const LatencyProfile& fallback);
};

// Draws per-invocation processing times from a profile.
class LatencySampler {
 public:
  explicit LatencySampler(const LatencyProfile& profile);
  double Next();

 private:
  LatencyProfile profile_;
  Rng rng_;
  std::size_t replay_pos_ = 0;
};

// One row of a recorded tracker run.
struct TrackerLogRow {
  FrameIndex frame = 0;
  double t_start = 0.0;
  double t_finish = 0.0;
  BoundingBox box;
};

std::vector<TrackerLogRow> ReadTrackerLog(std::istream& in);
std::vector<TrackerLogRow> ReadTrackerLog(const std::string& path);
void WriteTrackerLog(std::ostream& out, const std::vector<TrackerLogRow>& rows);

enum class TrackerBehavior { kOracleNoisy, kReplayLog };

struct TrackerAdapter {
  TrackerBehavior behavior = TrackerBehavior::kOracleNoisy;
  double sigma_pos = 0.0;    // pixels, on x and y
  double sigma_scale = 0.0;  // log-scale, on w and h
  std::uint64_t seed = 0;
  std::vector<TrackerLogRow> replay;  // kReplayLog only
  LatencyProfile latency = LatencyProfile::Constant(0.0);

  static TrackerAdapter Oracle(double sigma_pos, double sigma_scale,
                               std::uint64_t seed, LatencyProfile latency);
  // Boxes from the log, processing times (t_finish - t_start) replayed in
  // log order.
  static TrackerAdapter FromLog(std::vector<TrackerLogRow> rows);

  static TrackerAdapter FromConfig(const KeyValueConfig& cfg);
};

struct PredictorAdapter {
  std::string name;
  PredictorFactory make;
  int horizon = 1;
  LatencyProfile latency = LatencyProfile::Constant(0.0);
};

struct ProcessedFrame {
  std::size_t j = 0;
  FrameIndex frame = 0;
  double t_start = 0.0;
  double t_finish = 0.0;

  friend bool operator==(const ProcessedFrame&,
                         const ProcessedFrame&) = default;
};

struct RunLog {
  std::string sequence;
  double framerate = 30.0;
  std::size_t num_frames = 0;
  BoundingBox initial_box;
  std::vector<ProcessedFrame> processed;
  std::vector<TimedOutput> outputs;
  std::size_t predictor_invocations = 0;
  double predictor_latency_total = 0.0;

  FrameClock clock() const { return FrameClock(framerate); }
  std::vector<FrameIndex> processed_frames() const;
  double mean_predictor_latency() const;

  // Raw outputs only, with available_at = t_finish.
  static RunLog FromTrackerLog(const Sequence& seq,
                               const std::vector<TrackerLogRow>& rows);

  friend bool operator==(const RunLog&, const RunLog&) = default;
};

// CSV: kind,target_frame,available_at,x,y,w,h. A "#"-prefixed preamble
// carries sequence metadata so the log can be re-scored standalone.
void WriteRunLog(std::ostream& out, const RunLog& log);
void WriteRunLog(const std::string& path, const RunLog& log);
RunLog ReadRunLog(std::istream& in);
RunLog ReadRunLog(const std::string& path);
// CSV: j,frame,t_start,t_finish.
void WriteSchedule(std::ostream& out, const RunLog& log);

// Latest frame captured by `prev_finish`, constrained to be after
// `prev_frame`. Returns nullopt once `prev_frame` reaches `last_frame`.
// When the tracker is ahead of the stream the result is prev_frame + 1 and
// processing waits for its capture.
std::optional<FrameIndex> NextFrame(const FrameClock& clock, double prev_finish,
                                    FrameIndex prev_frame,
                                    FrameIndex last_frame);

RunLog RunStream(const Sequence& seq, const TrackerAdapter& tracker,
                 const PredictorAdapter* predictor = nullptr);

// Largest f_{j+1} - f_j over `trials` runs with derived seeds.
int PickHorizon(const Sequence& seq, const TrackerAdapter& tracker,
                int trials = 3);

}  // namespace latrack

#endif  // LATRACK_STREAM_SIM_H_
