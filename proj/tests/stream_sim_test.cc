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

#include "latrack/stream_sim.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "latrack/kalman.h"

namespace latrack {
namespace {

Sequence StaticSequence(std::size_t n, double framerate = 30.0) {
  std::vector<BoundingBox> boxes;
  for (std::size_t f = 0; f < n; ++f) {
    boxes.push_back({10.0 + 2.0 * static_cast<double>(f), 20, 30, 40});
  }
  return Sequence::FromBoxes("seq", FrameClock(framerate), boxes);
}

TrackerAdapter ConstantTracker(double latency) {
  return TrackerAdapter::Oracle(0.0, 0.0, 1, LatencyProfile::Constant(latency));
}

TEST(NextFrame, Examples) {
  const FrameClock clock(30);
  EXPECT_EQ(NextFrame(clock, 0.05, 0, 99), FrameIndex{1});
  EXPECT_EQ(NextFrame(clock, 0.10, 1, 99), FrameIndex{3});
  // Idle case: the tracker is ahead of the stream.
  EXPECT_EQ(NextFrame(clock, 0.02, 0, 99), FrameIndex{1});
  EXPECT_EQ(NextFrame(clock, 5.0, 3, 9), FrameIndex{9});
  EXPECT_FALSE(NextFrame(clock, 0.1, 9, 9));
}

TEST(RunStream, HandTracedSchedule) {
  const RunLog log = RunStream(StaticSequence(10), ConstantTracker(0.05));
  EXPECT_EQ(log.processed_frames(),
            (std::vector<FrameIndex>{0, 1, 3, 4, 6, 7, 9}));
  // Frame 1 waits for nothing (finish 0.05 > 1/30): starts at 0.05.
  EXPECT_DOUBLE_EQ(log.processed[1].t_start, 0.05);
  EXPECT_DOUBLE_EQ(log.processed[1].t_finish, 0.10);
}

TEST(RunStream, RealTimeTrackerIdlesUntilCapture) {
  const RunLog log = RunStream(StaticSequence(10), ConstantTracker(0.02));
  ASSERT_EQ(log.processed.size(), 10u);
  for (std::size_t f = 0; f < 10; ++f) {
    EXPECT_EQ(log.processed[f].frame, f);
    EXPECT_NEAR(log.processed[f].t_finish, static_cast<double>(f) / 30.0 + 0.02,
                1e-15);
  }
}

TEST(RunStream, ZeroNoiseOracleEmitsGroundTruth) {
  const Sequence seq = StaticSequence(20);
  const RunLog log = RunStream(seq, ConstantTracker(0.07));
  for (const auto& o : log.outputs) {
    ASSERT_EQ(o.kind, OutputKind::kRaw);
    EXPECT_EQ(o.box, *seq.ground_truth[o.target_frame]);
  }
}

TEST(RunStream, RawOutputsCarryFinishTimes) {
  const RunLog log = RunStream(
      StaticSequence(50),
      TrackerAdapter::Oracle(2.0, 0.05, 3,
                             LatencyProfile::Gaussian(0.04, 0.02, 9)));
  ASSERT_EQ(log.outputs.size(), log.processed.size());
  for (std::size_t j = 0; j < log.processed.size(); ++j) {
    EXPECT_EQ(log.outputs[j].target_frame, log.processed[j].frame);
    EXPECT_EQ(log.outputs[j].available_at, log.processed[j].t_finish);
  }
}

TEST(RunStream, ScheduleValidityAndThroughputUnderRandomLatency) {
  const FrameClock clock(30);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double mean = 0.005 + 0.0005 * static_cast<double>(seed);
    const LatencyProfile lat = LatencyProfile::Gaussian(mean, mean / 2, seed);
    const Sequence seq = StaticSequence(60);
    const RunLog log =
        RunStream(seq, TrackerAdapter::Oracle(1.0, 0.01, seed, lat));
    ASSERT_EQ(log.processed.front().frame, 0u);
    double min_latency = 1e9;
    for (std::size_t j = 0; j < log.processed.size(); ++j) {
      const auto& p = log.processed[j];
      min_latency = std::min(min_latency, p.t_finish - p.t_start);
      ASSERT_GE(p.t_finish - p.t_start, lat.floor - 1e-15);
      if (j == 0) continue;
      const auto& q = log.processed[j - 1];
      ASSERT_GT(p.frame, q.frame);
      ASSERT_TRUE(clock.CaptureTime(p.frame) <= q.t_finish + kTimeTolerance ||
                  p.frame == q.frame + 1);
      ASSERT_EQ(p.t_start, std::max(q.t_finish, clock.CaptureTime(p.frame)));
    }
    const double duration = clock.CaptureTime(seq.size() - 1);
    ASSERT_LE(log.processed.size(), seq.size());
    ASSERT_LE(static_cast<double>(log.processed.size()),
              1.0 + duration / min_latency + 1e-9);
  }
}

TEST(RunStream, DeterministicBytes) {
  const Sequence seq = StaticSequence(80);
  const TrackerAdapter trk = TrackerAdapter::Oracle(
      3.0, 0.1, 42, LatencyProfile::Gaussian(0.05, 0.01, 7));
  PredictorAdapter kf{"kf",
                      [] {
                        return std::make_unique<KalmanPredictor>(
                            KalmanNoise::Defaults());
                      },
                      3, LatencyProfile::Gaussian(0.002, 0.001, 5)};
  std::ostringstream a, b;
  WriteRunLog(a, RunStream(seq, trk, &kf));
  WriteRunLog(b, RunStream(seq, trk, &kf));
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunStream, PredictorEmissionCount) {
  const Sequence seq = StaticSequence(40);
  for (int n : {1, 2, 5}) {
    PredictorAdapter zero{"zero",
                          [] { return std::make_unique<ZeroMotionPredictor>(); },
                          n, LatencyProfile::Constant(0.004)};
    const RunLog log = RunStream(seq, ConstantTracker(0.05), &zero);
    std::size_t predicted = 0;
    for (const auto& o : log.outputs) {
      predicted += o.kind == OutputKind::kPredicted;
    }
    EXPECT_EQ(predicted, static_cast<std::size_t>(n) * (log.processed.size() - 1));
    EXPECT_EQ(log.predictor_invocations, log.processed.size() - 1);
    EXPECT_NEAR(log.mean_predictor_latency(), 0.004, 1e-15);
  }
}

TEST(RunStream, PredictionsTargetFramesAfterPreviousAndDelayTracking) {
  const Sequence seq = StaticSequence(10);
  PredictorAdapter zero{"zero",
                        [] { return std::make_unique<ZeroMotionPredictor>(); },
                        2, LatencyProfile::Constant(0.005)};
  const RunLog log = RunStream(seq, ConstantTracker(0.05), &zero);
  // Frame 0 finishes at 0.05; frame 1 arrives; batch ready at 0.055.
  std::vector<TimedOutput> first_batch;
  for (const auto& o : log.outputs) {
    if (o.kind == OutputKind::kPredicted && first_batch.size() < 2) {
      first_batch.push_back(o);
    }
  }
  ASSERT_EQ(first_batch.size(), 2u);
  EXPECT_EQ(first_batch[0].target_frame, 1u);
  EXPECT_EQ(first_batch[1].target_frame, 2u);
  EXPECT_DOUBLE_EQ(first_batch[0].available_at, 0.055);
  EXPECT_DOUBLE_EQ(log.processed[1].t_start, 0.055);
  EXPECT_DOUBLE_EQ(log.processed[1].t_finish, 0.105);
}

TEST(PickHorizon, Examples) {
  EXPECT_EQ(PickHorizon(StaticSequence(10), ConstantTracker(0.05)), 2);
  EXPECT_EQ(PickHorizon(StaticSequence(30), ConstantTracker(0.02)), 1);
  EXPECT_EQ(PickHorizon(StaticSequence(30), ConstantTracker(0.34)), 10);
}

TEST(LatencySampler, GaussianRespectsFloor) {
  LatencySampler s(LatencyProfile::Gaussian(0.0, 0.05, 3, 0.002));
  for (int i = 0; i < 10000; ++i) ASSERT_GE(s.Next(), 0.002);
}

TEST(LatencySampler, ReplayExhaustion) {
  LatencySampler s(LatencyProfile::Replay({0.01, 0.02}));
  EXPECT_EQ(s.Next(), 0.01);
  EXPECT_EQ(s.Next(), 0.02);
  EXPECT_THROW(s.Next(), ValidationError);
}

TEST(LatencyProfile, Validation) {
  EXPECT_THROW(LatencyProfile::Constant(-1).Validate(), ValidationError);
  EXPECT_THROW(LatencyProfile::Gaussian(0.1, -1, 0).Validate(),
               ValidationError);
  EXPECT_THROW(LatencyProfile::Replay({}).Validate(), ValidationError);
}

TEST(TrackerLog, ReplayReproducesRecordedRun) {
  const Sequence seq = StaticSequence(30);
  const TrackerAdapter trk = TrackerAdapter::Oracle(
      2.0, 0.05, 11, LatencyProfile::Gaussian(0.06, 0.02, 4));
  const RunLog live = RunStream(seq, trk);
  std::vector<TrackerLogRow> rows;
  for (std::size_t j = 0; j < live.processed.size(); ++j) {
    rows.push_back({live.processed[j].frame, live.processed[j].t_start,
                    live.processed[j].t_finish, live.outputs[j].box});
  }
  std::stringstream buf;
  WriteTrackerLog(buf, rows);
  const auto back = ReadTrackerLog(buf);
  ASSERT_EQ(back.size(), rows.size());

  const RunLog scored = RunLog::FromTrackerLog(seq, back);
  EXPECT_EQ(scored.outputs.size(), live.outputs.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_EQ(scored.outputs[j].box, live.outputs[j].box);
    EXPECT_EQ(scored.outputs[j].available_at, live.outputs[j].available_at);
  }

  // Re-simulating with the replayed durations reproduces the schedule.
  const RunLog replayed = RunStream(seq, TrackerAdapter::FromLog(back));
  EXPECT_EQ(replayed.processed_frames(), live.processed_frames());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_NEAR(replayed.processed[j].t_finish, live.processed[j].t_finish,
                1e-12);
  }
}

TEST(TrackerLog, RejectsNonIncreasingFrames) {
  std::istringstream in(
      "frame,t_start,t_finish,x,y,w,h\n"
      "0,0,0.05,1,1,5,5\n"
      "0,0.05,0.1,1,1,5,5\n");
  EXPECT_THROW(ReadTrackerLog(in), ValidationError);
}

TEST(RunLogFile, RoundTripIsExact) {
  const Sequence seq = StaticSequence(25);
  PredictorAdapter kf{"kf",
                      [] {
                        return std::make_unique<KalmanPredictor>(
                            KalmanNoise::Defaults());
                      },
                      2, LatencyProfile::Constant(0.001)};
  const RunLog log = RunStream(
      seq,
      TrackerAdapter::Oracle(2, 0.1, 5, LatencyProfile::Gaussian(0.05, 0.02, 1)),
      &kf);
  std::stringstream buf;
  WriteRunLog(buf, log);
  EXPECT_EQ(ReadRunLog(buf), log);
}

}  // namespace
}  // namespace latrack
