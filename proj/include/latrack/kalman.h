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

#ifndef LATRACK_KALMAN_H_
#define LATRACK_KALMAN_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "latrack/core.h"
#include "latrack/predictor.h"

namespace latrack {

using KfVector = Eigen::Matrix<double, 8, 1>;
using KfMatrix = Eigen::Matrix<double, 8, 8>;

// Diagonal noise of the constant-velocity box filter.
struct KalmanNoise {
  Eigen::Matrix<double, 8, 1> q;  // per frame, (cx, cy, w, h, vcx, vcy, vw, vh)
  Eigen::Matrix<double, 4, 1> r;  // measurement, (cx, cy, w, h)

  static KalmanNoise Defaults();
  void Validate() const;

  // JSON {"q": [8], "r": [4]}.
  std::string ToJson() const;
  static KalmanNoise FromJson(const std::string& text);
  static KalmanNoise Load(const std::string& path);
  void Save(const std::string& path) const;
};

inline constexpr double kKfInitialVariance = 10.0;
inline constexpr double kKfMinSize = 1.0;

// State (cx, cy, w, h, vcx, vcy, vw, vh) in pixels and pixels per frame.
struct KalmanState {
  KfVector x = KfVector::Zero();
  KfMatrix P = KfMatrix::Identity() * kKfInitialVariance;
  KalmanNoise noise = KalmanNoise::Defaults();

  static KalmanState Init(const BoundingBox& box,
                          const KalmanNoise& noise = KalmanNoise::Defaults());

  BoundingBox box() const;
};

KfMatrix KfTransition(int gap);

// Time update over `gap` frames without correction.
KalmanState KfTimeUpdate(const KalmanState& s, int gap);

// Time update over `gap` frames, then correction with `measured`.
KalmanState KfUpdate(const KalmanState& s, const BoundingBox& measured,
                     int gap);

// Boxes 1..horizon frames ahead from iterated single-frame time updates.
// Sizes are clamped to kKfMinSize.
std::vector<BoundingBox> KfPredict(const KalmanState& s, int horizon);

std::vector<BoundingBox> ZeroMotionPredict(const BoundingBox& last,
                                           int horizon);

class ZeroMotionPredictor : public Predictor {
 public:
  std::string name() const override { return "zero"; }
  void Observe(FrameIndex frame, const BoundingBox& raw) override;
  std::vector<BoundingBox> Predict(int horizon) override;

 private:
  BoundingBox last_;
};

class KalmanPredictor : public Predictor {
 public:
  explicit KalmanPredictor(KalmanNoise noise, std::string name = "kf");
  std::string name() const override { return name_; }
  void Observe(FrameIndex frame, const BoundingBox& raw) override;
  std::vector<BoundingBox> Predict(int horizon) override;

 private:
  KalmanNoise noise_;
  std::string name_;
  bool started_ = false;
  FrameIndex last_frame_ = 0;
  KalmanState state_;
};

}  // namespace latrack

#endif  // LATRACK_KALMAN_H_
