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

#include "latrack/kf_fit.h"

#include <gtest/gtest.h>

#include <cmath>

namespace latrack {
namespace {

std::vector<TrainSample> Samples(double noise, std::uint64_t seed, int count) {
  SyntheticSpec spec;
  spec.kind = MotionKind::kConstantVelocity;
  spec.duration = 60;
  spec.noise = noise;
  spec.seed = seed;
  spec.size_drift = {0, 0};
  SamplerConfig sc;
  sc.anchor_step = 3;
  return SampleSequences(GenSynthetic(spec, count), sc, seed);
}

TEST(KfSamplesL1, ZeroOnNoiselessConstantVelocityWithSettledFilter) {
  // With tiny process noise and a long, exact history the filter's
  // predictions approach the constant-velocity extrapolation.
  const auto samples = Samples(0.0, 1, 4);
  KalmanNoise n = KalmanNoise::Defaults();
  EXPECT_LT(KfSamplesL1(n, samples), ZeroMotionL1(samples));
  EXPECT_THROW(KfSamplesL1(n, {}), ValidationError);
}

TEST(KfFitNoise, NeverWorseThanInitOnValidation) {
  const auto train = Samples(0.0, 2, 8);
  const auto val = Samples(0.0, 3, 3);
  OptimizerConfig opt;
  opt.epochs = 3;
  const KfFitResult r = KfFitNoise(train, val, KalmanNoise::Defaults(), opt);
  EXPECT_LE(r.best_val_l1, r.init_val_l1);
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_DOUBLE_EQ(KfSamplesL1(r.noise, val), r.best_val_l1);
}

TEST(KfFitNoise, HeavyMeasurementNoiseRaisesRatio) {
  const auto train = Samples(6.0, 4, 12);
  const auto val = Samples(6.0, 5, 4);
  OptimizerConfig opt;
  opt.epochs = 5;
  const KalmanNoise init = KalmanNoise::Defaults();
  const KfFitResult r = KfFitNoise(train, val, init, opt);
  EXPECT_GT(NoiseLogRatio(r.noise), NoiseLogRatio(init));
  EXPECT_LE(r.best_val_l1, r.init_val_l1);
}

TEST(KfFitNoise, RejectsZeroProcessNoiseInit) {
  const auto s = Samples(0.0, 6, 2);
  KalmanNoise init = KalmanNoise::Defaults();
  init.q[0] = 0.0;
  EXPECT_THROW(KfFitNoise(s, s, init, OptimizerConfig{}), ValidationError);
}

}  // namespace
}  // namespace latrack
