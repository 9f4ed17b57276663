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

#include "latrack/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace latrack {
namespace {

std::vector<BoundingBox> CvTrajectory(int len, double vx = 1.5, double vy = -0.5) {
  std::vector<BoundingBox> t;
  for (int f = 0; f < len; ++f) t.push_back({50 + vx * f, 40 + vy * f, 20, 16});
  return t;
}

// Scalar AdamW written out directly: decay, moments, bias correction.
struct ScalarAdamW {
  double m = 0, v = 0;
  long long t = 0;
  double Step(double w, double g, double lr, double b1, double b2, double eps,
              double wd) {
    ++t;
    w *= 1 - lr * wd;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

TEST(AdamW, ZeroGradientNoDecayIsFixedPoint) {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(3, cfg);
  std::vector<double> w{1.0, -2.0, 3.5};
  const auto orig = w;
  for (int i = 0; i < 10; ++i) opt.Step(w, std::vector<double>(3, 0.0), 0.1);
  EXPECT_EQ(w, orig);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(1, cfg);
  std::vector<double> w{0.7};
  opt.Step(w, std::vector<double>{1.0}, 0.03);
  EXPECT_NEAR(w[0], 0.7 - 0.03, 1e-9);
}

TEST(AdamW, DecayOnlyShrinksGeometrically) {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.1;
  AdamW opt(1, cfg);
  std::vector<double> w{2.0};
  for (int i = 0; i < 5; ++i) opt.Step(w, std::vector<double>{0.0}, 0.5);
  EXPECT_NEAR(w[0], 2.0 * std::pow(1 - 0.05, 5), 1e-14);
}

TEST(AdamW, MatchesScalarReference) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 1);
  for (int scenario = 0; scenario < 200; ++scenario) {
    OptimizerConfig cfg;
    cfg.beta1 = 0.5 + 0.49 * u(rng);
    cfg.beta2 = 0.9 + 0.0999 * u(rng);
    cfg.weight_decay = 0.1 * u(rng);
    cfg.eps = 1e-8;
    AdamW opt(1, cfg);
    ScalarAdamW ref;
    std::vector<double> w{g(rng)};
    double rw = w[0];
    for (int step = 0; step < 50; ++step) {
      const double grad = g(rng);
      const double lr = 0.1 * u(rng);
      opt.Step(w, std::vector<double>{grad}, lr);
      rw = ref.Step(rw, grad, lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
      ASSERT_NEAR(w[0], rw, 1e-12);
    }
  }
}

TEST(AdamW, RejectsNonFiniteGradient) {
  AdamW opt(1, OptimizerConfig{});
  std::vector<double> w{1.0};
  EXPECT_THROW(opt.Step(w, std::vector<double>{std::nan("")}, 0.1),
               DivergenceError);
}

TEST(OptimizerConfig, MilestoneSchedule) {
  OptimizerConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.LearningRate(0), 0.03);
  EXPECT_DOUBLE_EQ(cfg.LearningRate(29), 0.03);
  EXPECT_DOUBLE_EQ(cfg.LearningRate(30), 0.003);
  EXPECT_DOUBLE_EQ(cfg.LearningRate(79), 0.003);
  EXPECT_NEAR(cfg.LearningRate(80), 0.0003, 1e-18);
  OptimizerConfig bad;
  bad.lr = -1;
  EXPECT_THROW(bad.Validate(), ValidationError);
}

TEST(SampleWindows, AnchorCount) {
  SamplerConfig cfg;
  cfg.k = 3;
  cfg.horizon = 1;
  cfg.strides = {1};
  EXPECT_EQ(SampleWindows(CvTrajectory(5), cfg, 0).size(), 1u);
  cfg.strides = {1, 2, 3};
  cfg.horizon = 3;
  // Anchors 9 .. 30 - 1 - 3.
  EXPECT_EQ(SampleWindows(CvTrajectory(30), cfg, 0).size(), 18u);
  EXPECT_THROW(SampleWindows(CvTrajectory(12), cfg, 0), ValidationError);
}

TEST(SampleWindows, ConstantVelocityTargetsScaleWithHorizon) {
  SamplerConfig cfg;
  const auto traj = CvTrajectory(40);
  const NormalizedMotion one = EncodeMotion(traj[0], traj[1]);
  for (const auto& s : SampleWindows(traj, cfg, 3)) {
    for (int n = 0; n < cfg.horizon; ++n) {
      for (int c = 0; c < 4; ++c) {
        EXPECT_NEAR(s.targets[n][c], (n + 1) * one[c], 1e-12);
      }
    }
  }
}

TEST(SampleWindows, TargetsMatchIndependentRecomputation) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 2);
  std::vector<BoundingBox> traj;
  double x = 100, y = 100, w = 30, h = 20;
  for (int f = 0; f < 80; ++f) {
    x += 1 + g(rng);
    y += g(rng);
    w *= std::exp(0.01 * g(rng));
    h *= std::exp(0.01 * g(rng));
    traj.push_back({x, y, w, h});
  }
  SamplerConfig cfg;
  cfg.k = 4;
  cfg.horizon = 3;
  cfg.strides = {1, 2, 3, 5};
  std::set<int> seen_strides;
  for (const auto& s : SampleWindows(traj, cfg, 7)) {
    std::size_t a = 0;
    while (!(traj[a] == s.latest_box)) ++a;
    for (int n = 0; n < 3; ++n) {
      const NormalizedMotion t = EncodeMotion(traj[a], traj[a + n + 1]);
      for (int c = 0; c < 4; ++c) ASSERT_EQ(s.targets[n][c], t[c]);
    }
    ASSERT_EQ(s.history.size(), 4u);
    std::size_t cur = a;
    for (int i = 3; i >= 0; --i) {
      const int gap = s.history.intervals[i];
      ASSERT_TRUE(std::count(cfg.strides.begin(), cfg.strides.end(), gap));
      seen_strides.insert(gap);
      const NormalizedMotion m = EncodeMotion(traj[cur - gap], traj[cur]);
      for (int c = 0; c < 4; ++c) ASSERT_EQ(s.history.motions[i][c], m[c]);
      cur -= gap;
    }
    const NormalizedMotion p = AverageSpeed(s.history);
    for (int c = 0; c < 4; ++c) ASSERT_EQ(s.speed[c], p[c]);
  }
  EXPECT_EQ(seen_strides.size(), 4u);
}

TEST(SampleWindows, HistoryBoxesRebuildsTrajectoryPoints) {
  const auto traj = CvTrajectory(40);
  for (const auto& s : SampleWindows(traj, SamplerConfig{}, 1)) {
    const auto boxes = HistoryBoxes(s);
    ASSERT_EQ(boxes.size(), 4u);
    EXPECT_EQ(boxes.back(), s.latest_box);
    for (const auto& b : boxes) {
      const double steps = (b.x - 50) / 1.5;
      EXPECT_NEAR(steps, std::round(steps), 1e-9);
    }
  }
}

TEST(GenSynthetic, ConstantVelocityExample) {
  SyntheticSpec spec;
  spec.kind = MotionKind::kConstantVelocity;
  spec.duration = 10;
  spec.center = {20, 20};
  spec.size = {20, 20};
  spec.vx = {2, 2};
  spec.vy = {1, 1};
  spec.size_drift = {0, 0};
  const auto seqs = GenSynthetic(spec, 1);
  ASSERT_EQ(seqs.size(), 1u);
  const BoundingBox b = *seqs[0].ground_truth[3];
  EXPECT_NEAR(b.x, 16, 1e-12);
  EXPECT_NEAR(b.y, 13, 1e-12);
  EXPECT_NEAR(b.w, 20, 1e-12);
  EXPECT_NEAR(b.h, 20, 1e-12);
}

TEST(GenSynthetic, StaticAndDeterministic) {
  SyntheticSpec spec;
  spec.vx = spec.vy = {0, 0};
  spec.size_drift = {0, 0};
  for (const auto& s : GenSynthetic(spec, 3)) {
    for (const auto& b : s.ground_truth) EXPECT_EQ(*b, *s.ground_truth[0]);
  }
  spec = SyntheticSpec{};
  spec.kind = MotionKind::kRandomWalk;
  spec.noise = 1.0;
  spec.seed = 99;
  const auto a = GenSynthetic(spec, 8), b = GenSynthetic(spec, 8);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].ground_truth, b[i].ground_truth);
  }
  spec.duration = 1;
  EXPECT_THROW(GenSynthetic(spec, 1), ValidationError);
}

TEST(GenSynthetic, SinusoidStartsAtInitialCenter) {
  SyntheticSpec spec;
  spec.kind = MotionKind::kSinusoidal;
  spec.center = {100, 100};
  spec.size = {30, 30};
  spec.phase = {0.7, 0.7};
  for (const auto& s : GenSynthetic(spec, 4)) {
    EXPECT_NEAR(s.ground_truth[0]->cx(), 100, 1e-9);
    EXPECT_NEAR(s.ground_truth[0]->cy(), 100, 1e-9);
  }
}

TEST(SplitByTrajectory, DisjointAndComplete) {
  SyntheticSpec spec;
  const auto all = GenSynthetic(spec, 20);
  std::vector<Sequence> train, val;
  SplitByTrajectory(all, 0.1, 3, &train, &val);
  EXPECT_EQ(val.size(), 2u);
  EXPECT_EQ(train.size(), 18u);
  std::set<std::string> names;
  for (const auto& s : train) names.insert(s.name);
  for (const auto& s : val) EXPECT_FALSE(names.count(s.name));
}

TEST(BatchGradient, ParallelMatchesSerial) {
  SyntheticSpec spec;
  spec.kind = MotionKind::kConstantAcceleration;
  const auto samples = SampleSequences(GenSynthetic(spec, 6), SamplerConfig{}, 2);
  const PmWeights w = PmWeights::Init(PmConfig{}, 5);
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  const BatchGrad a = BatchGradient(w, samples, idx);
  const BatchGrad b = BatchGradientSerial(w, samples, idx);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grad, b.grad);
}

TEST(TrainPm, BiasOnlyNetHasZeroLossOnConstantVelocity) {
  PmConfig cfg;
  PmWeights w(cfg);
  std::fill(w.params().begin(), w.params().end(), 0.0);
  for (int n = 0; n < cfg.horizon; ++n) {
    w.tensor("head_fc." + std::to_string(n) + ".bias")[0] = n + 1.0;
  }
  auto ow = w.tensor("out_fc.weight");
  for (int c = 0; c < 4; ++c) ow[static_cast<std::size_t>(c) * cfg.c_dec] = 1.0;
  SyntheticSpec spec;
  spec.size_drift = {0, 0};
  const auto samples = SampleSequences(GenSynthetic(spec, 5), SamplerConfig{}, 1);
  EXPECT_LT(EvaluateL1(w, samples), 1e-12);
  EXPECT_GT(ZeroMotionL1(samples), 1e-3);
}

TEST(TrainPm, ReducesLossAndIsReproducible) {
  SyntheticSpec spec;
  spec.kind = MotionKind::kConstantAcceleration;
  spec.duration = 60;
  std::vector<Sequence> train_seqs, val_seqs;
  SplitByTrajectory(GenSynthetic(spec, 20), 0.2, 1, &train_seqs, &val_seqs);
  const auto train = SampleSequences(train_seqs, SamplerConfig{}, 1);
  const auto val = SampleSequences(val_seqs, SamplerConfig{}, 2);
  OptimizerConfig opt;
  opt.epochs = 6;
  opt.seed = 3;
  const TrainResult a = TrainPm(train, val, opt, PmConfig{});
  const TrainResult b = TrainPm(train, val, opt, PmConfig{});
  ASSERT_EQ(a.history.size(), 6u);
  EXPECT_LT(a.history.back().train_l1, a.history.front().train_l1);
  EXPECT_LT(a.best_val_l1, EvaluateL1(PmWeights::Init(PmConfig{}, opt.seed), val));
  EXPECT_EQ(a.weights, b.weights);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_l1, b.history[i].train_l1);
    EXPECT_EQ(a.history[i].val_l1, b.history[i].val_l1);
  }
  std::ostringstream csv;
  WriteLossCsv(csv, a.history);
  EXPECT_EQ(csv.str().substr(0, 22), "epoch,train_l1,val_l1\n");
}

}  // namespace
}  // namespace latrack
