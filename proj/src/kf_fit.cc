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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace latrack {

namespace {

double SampleError(const KalmanNoise& noise, const TrainSample& s) {
  const std::vector<BoundingBox> boxes = HistoryBoxes(s);
  KalmanState state = KalmanState::Init(boxes.front(), noise);
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    state = KfUpdate(state, boxes[i], s.history.intervals[i - 1]);
  }
  const auto preds = KfPredict(state, static_cast<int>(s.targets.size()));
  double err = 0.0;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    const NormalizedMotion m = EncodeMotion(s.latest_box, preds[n]);
    for (int c = 0; c < 4; ++c) err += std::abs(m[c] - s.targets[n][c]);
  }
  return err / (4.0 * static_cast<double>(preds.size()));
}

double SubsetL1(const KalmanNoise& noise, const std::vector<TrainSample>& all,
                std::span<const std::size_t> idx) {
  std::vector<double> errs(idx.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(idx.size()); ++i) {
    errs[static_cast<std::size_t>(i)] =
        SampleError(noise, all[idx[static_cast<std::size_t>(i)]]);
  }
  double sum = 0.0;
  for (double e : errs) sum += e;
  return sum / static_cast<double>(idx.size());
}

KalmanNoise FromLog(std::span<const double> theta) {
  KalmanNoise n;
  for (int i = 0; i < 8; ++i) n.q[i] = std::exp(theta[i]);
  for (int i = 0; i < 4; ++i) n.r[i] = std::exp(theta[8 + i]);
  return n;
}

}  // namespace

double KfSamplesL1(const KalmanNoise& noise,
                   const std::vector<TrainSample>& samples) {
  if (samples.empty()) throw ValidationError("evaluation set is empty");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  return SubsetL1(noise, samples, idx);
}

double NoiseLogRatio(const KalmanNoise& noise) {
  return std::log(noise.r.mean()) - std::log(noise.q.mean());
}

KfFitResult KfFitNoise(const std::vector<TrainSample>& train,
                       const std::vector<TrainSample>& val,
                       const KalmanNoise& init, const OptimizerConfig& opt,
                       double fd_step) {
  opt.Validate();
  init.Validate();
  if (train.empty() || val.empty()) {
    throw ValidationError("noise fitting needs train and validation samples");
  }
  for (int i = 0; i < 8; ++i) {
    if (!(init.q[i] > 0.0)) {
      throw ValidationError("noise fitting needs strictly positive init q");
    }
  }
  std::vector<double> theta(12);
  for (int i = 0; i < 8; ++i) theta[i] = std::log(init.q[i]);
  for (int i = 0; i < 4; ++i) theta[8 + i] = std::log(init.r[i]);

  KfFitResult result;
  result.noise = init;
  result.init_val_l1 = result.best_val_l1 = KfSamplesL1(init, val);
  AdamW adam(theta.size(), opt);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(theta.size());

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(SplitSeed(opt.seed, static_cast<std::uint64_t>(epoch) + 1));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = opt.LearningRate(epoch);
    double train_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += opt.batch_size) {
      const std::size_t e = std::min(order.size(), b + opt.batch_size);
      std::span<const std::size_t> batch(order.data() + b, e - b);
      train_sum += SubsetL1(FromLog(theta), train, batch) *
                   static_cast<double>(batch.size());
      for (std::size_t p = 0; p < theta.size(); ++p) {
        std::vector<double> hi = theta, lo = theta;
        hi[p] += fd_step;
        lo[p] -= fd_step;
        grad[p] = (SubsetL1(FromLog(hi), train, batch) -
                   SubsetL1(FromLog(lo), train, batch)) /
                  (2.0 * fd_step);
      }
      adam.Step(theta, grad, lr);
    }
    const KalmanNoise current = FromLog(theta);
    EpochRecord rec{epoch + 1, train_sum / static_cast<double>(train.size()),
                    KfSamplesL1(current, val)};
    if (!std::isfinite(rec.val_l1)) {
      throw DivergenceError("noise fitting diverged at epoch " +
                            std::to_string(rec.epoch));
    }
    result.history.push_back(rec);
    if (rec.val_l1 < result.best_val_l1) {
      result.best_val_l1 = rec.val_l1;
      result.best_epoch = rec.epoch;
      result.noise = current;
    }
  }
  return result;
}

}  // namespace latrack
