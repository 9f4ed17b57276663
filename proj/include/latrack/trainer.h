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

#ifndef LATRACK_TRAINER_H_
#define LATRACK_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "latrack/core.h"
#include "latrack/motion_codec.h"
#include "latrack/pm_net.h"
#include "latrack/util.h"

namespace latrack {

// ---------------------------------------------------------------------------
// Synthetic trajectories

enum class MotionKind {
  kConstantVelocity,
  kConstantAcceleration,
  kSinusoidal,
  kRandomWalk
};

const char* ToString(MotionKind kind);
MotionKind ParseMotionKind(const std::string& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SyntheticSpec {
  MotionKind kind = MotionKind::kConstantVelocity;
  int duration = 120;  // frames
  double framerate = 30.0;
  Range center{200.0, 400.0};  // initial cx and cy, pixels
  Range size{40.0, 80.0};      // initial w and h, pixels
  Range vx{-3.0, 3.0};         // px/frame
  Range vy{-3.0, 3.0};
  Range ax{-0.1, 0.1};         // px/frame^2
  Range ay{-0.1, 0.1};
  Range amplitude{20.0, 60.0}; // px, sinusoidal
  Range period{40.0, 120.0};   // frames, sinusoidal
  Range phase{0.0, 0.0};       // radians, sinusoidal
  Range size_drift{-0.005, 0.005};  // log-size change per frame
  double walk_sigma = 0.3;     // px/frame velocity innovation, random walk
  double noise = 0.0;          // px, added to x and y of every frame
  std::uint64_t seed = 0;
  std::string prefix = "syn";

  void Validate() const;
  // Keys mirror the field names; ranges as "lo,hi".
  static SyntheticSpec FromConfig(const KeyValueConfig& cfg);
};

std::vector<Sequence> GenSynthetic(const SyntheticSpec& spec, int count);

// ---------------------------------------------------------------------------
// Dynamic temporal sampling

struct TrainSample {
  MotionHistory history;
  BoundingBox latest_box;
  // Motion from latest_box to each of the next N frames.
  std::vector<NormalizedMotion> targets;
  NormalizedMotion speed;
  PmInput input;
};

struct SamplerConfig {
  int k = 3;
  int horizon = 3;
  std::vector<int> strides{1, 2, 3};
  int anchor_step = 1;  // take every anchor_step-th valid anchor
};

// One sample per valid anchor a in [k * max_stride, len - 1 - N]; the gaps
// of each history step are drawn uniformly from `strides`.
std::vector<TrainSample> SampleWindows(const std::vector<BoundingBox>& traj,
                                       const SamplerConfig& cfg,
                                       std::uint64_t seed);

std::vector<TrainSample> SampleSequences(const std::vector<Sequence>& seqs,
                                         const SamplerConfig& cfg,
                                         std::uint64_t seed);

// Reconstructs the k + 1 history boxes (oldest first) and the gaps between
// them from a sample.
std::vector<BoundingBox> HistoryBoxes(const TrainSample& s);

// Keeps the latest k history steps and recomputes speed and network input.
// Lets a long-history sample feed both the filter and the network.
TrainSample TruncateHistory(const TrainSample& s, int k);

// Whole-trajectory split; `val_fraction` of sequences go to validation.
void SplitByTrajectory(const std::vector<Sequence>& all, double val_fraction,
                       std::uint64_t seed, std::vector<Sequence>* train,
                       std::vector<Sequence>* val);

// ---------------------------------------------------------------------------
// Optimization

struct OptimizerConfig {
  double lr = 0.03;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int epochs = 100;
  std::vector<int> milestones{30, 80};
  double gamma = 0.1;
  int batch_size = 64;
  std::uint64_t seed = 0;

  void Validate() const;
  double LearningRate(int epoch) const;
};

// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(std::size_t size, const OptimizerConfig& cfg);

  // Throws DivergenceError on a non-finite gradient.
  void Step(std::span<double> params, std::span<const double> grads,
            double lr);
  long long steps() const { return step_; }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  long long step_ = 0;
};

struct BatchGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean L1 loss and gradient over samples[indices]. Per-sample gradients are
// computed in parallel and summed in index order.
BatchGrad BatchGradient(const PmWeights& w,
                        const std::vector<TrainSample>& samples,
                        std::span<const std::size_t> indices);
BatchGrad BatchGradientSerial(const PmWeights& w,
                              const std::vector<TrainSample>& samples,
                              std::span<const std::size_t> indices);

double EvaluateL1(const PmWeights& w, const std::vector<TrainSample>& samples);
// Loss of predicting no motion at all.
double ZeroMotionL1(const std::vector<TrainSample>& samples);

struct EpochRecord {
  int epoch = 0;
  double train_l1 = 0.0;
  double val_l1 = 0.0;
};

struct TrainResult {
  PmWeights weights;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 = initialization
  double best_val_l1 = 0.0;
};

TrainResult TrainPm(const std::vector<TrainSample>& train,
                    const std::vector<TrainSample>& val,
                    const OptimizerConfig& opt, const PmConfig& net);

// epoch,train_l1,val_l1
void WriteLossCsv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace latrack

#endif  // LATRACK_TRAINER_H_
