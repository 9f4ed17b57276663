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

#ifndef LATRACK_KF_FIT_H_
#define LATRACK_KF_FIT_H_

#include <vector>

#include "latrack/kalman.h"
#include "latrack/trainer.h"

namespace latrack {

// Mean L1 error, in normalized-motion space, of the filter's 1..N step
// predictions after running it over each sample's history boxes.
double KfSamplesL1(const KalmanNoise& noise,
                   const std::vector<TrainSample>& samples);

struct KfFitResult {
  KalmanNoise noise;
  double init_val_l1 = 0.0;
  double best_val_l1 = 0.0;
  int best_epoch = 0;  // 0 = initialization
  std::vector<EpochRecord> history;
};

// Learns log-diagonals of Q and R with AdamW on central-difference
// gradients of KfSamplesL1. Returns the best-on-validation noise.
KfFitResult KfFitNoise(const std::vector<TrainSample>& train,
                       const std::vector<TrainSample>& val,
                       const KalmanNoise& init, const OptimizerConfig& opt,
                       double fd_step = 1e-4);

// log(mean r) - log(mean q); grows when the filter trusts measurements less.
double NoiseLogRatio(const KalmanNoise& noise);

}  // namespace latrack

#endif  // LATRACK_KF_FIT_H_
