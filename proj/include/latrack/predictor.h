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

#ifndef LATRACK_PREDICTOR_H_
#define LATRACK_PREDICTOR_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latrack/core.h"

namespace latrack {

// Online box predictor fed with the tracker's raw outputs. One instance
// belongs to one stream run.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string name() const = 0;

  // Called once for the initial box at frame 0 and then after every raw
  // tracker output, in processing order.
  virtual void Observe(FrameIndex frame, const BoundingBox& raw) = 0;

  // Boxes for frames latest+1 ... latest+horizon, where `latest` is the
  // most recently observed frame.
  virtual std::vector<BoundingBox> Predict(int horizon) = 0;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

}  // namespace latrack

#endif  // LATRACK_PREDICTOR_H_
