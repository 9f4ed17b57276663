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

#include "latrack/kalman.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace latrack {

KalmanNoise KalmanNoise::Defaults() {
  KalmanNoise n;
  n.q << 1e-2, 1e-2, 1e-2, 1e-2, 1e-3, 1e-3, 1e-3, 1e-3;
  n.r << 1.0, 1.0, 1.0, 1.0;
  return n;
}

void KalmanNoise::Validate() const {
  for (int i = 0; i < 8; ++i) {
    if (!(q[i] >= 0.0) || !std::isfinite(q[i])) {
      throw ValidationError("process noise must be finite and >= 0");
    }
  }
  for (int i = 0; i < 4; ++i) {
    if (!(r[i] > 0.0) || !std::isfinite(r[i])) {
      throw ValidationError("measurement noise must be finite and > 0");
    }
  }
}

std::string KalmanNoise::ToJson() const {
  nlohmann::ordered_json j;
  j["q"] = std::vector<double>(q.data(), q.data() + 8);
  j["r"] = std::vector<double>(r.data(), r.data() + 4);
  return j.dump(2);
}

KalmanNoise KalmanNoise::FromJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("noise json: ") + e.what());
  }
  if (!j.contains("q") || !j.contains("r") || j["q"].size() != 8 ||
      j["r"].size() != 4) {
    throw ValidationError("noise json needs q[8] and r[4]");
  }
  KalmanNoise n;
  for (int i = 0; i < 8; ++i) n.q[i] = j["q"][i].get<double>();
  for (int i = 0; i < 4; ++i) n.r[i] = j["r"][i].get<double>();
  n.Validate();
  return n;
}

KalmanNoise KalmanNoise::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open noise file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return FromJson(text);
}

void KalmanNoise::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << ToJson() << '\n';
}

KalmanState KalmanState::Init(const BoundingBox& box,
                              const KalmanNoise& noise) {
  RequireValid(box, "filter initial box");
  noise.Validate();
  KalmanState s;
  s.x << box.cx(), box.cy(), box.w, box.h, 0, 0, 0, 0;
  s.noise = noise;
  return s;
}

BoundingBox KalmanState::box() const {
  return BoundingBox::FromCenter(x[0], x[1], std::max(x[2], kKfMinSize),
                                 std::max(x[3], kKfMinSize));
}

KfMatrix KfTransition(int gap) {
  KfMatrix F = KfMatrix::Identity();
  F.topRightCorner<4, 4>() =
      Eigen::Matrix4d::Identity() * static_cast<double>(gap);
  return F;
}

KalmanState KfTimeUpdate(const KalmanState& s, int gap) {
  if (gap < 1) throw ValidationError("filter gap must be >= 1");
  // Per-frame steps, so process noise accumulates as it would frame by frame.
  const KfMatrix F = KfTransition(1);
  KalmanState out = s;
  for (int i = 0; i < gap; ++i) {
    out.x = F * out.x;
    out.P = F * out.P * F.transpose();
    out.P.diagonal() += s.noise.q;
    out.P = 0.5 * (out.P + out.P.transpose());
  }
  return out;
}

KalmanState KfUpdate(const KalmanState& s, const BoundingBox& measured,
                     int gap) {
  RequireValid(measured, "filter measurement");
  KalmanState out = KfTimeUpdate(s, gap);
  Eigen::Vector4d z(measured.cx(), measured.cy(), measured.w, measured.h);
  // H selects the first four state components.
  const Eigen::Vector4d innovation = z - out.x.head<4>();
  Eigen::Matrix4d S = out.P.topLeftCorner<4, 4>();
  S.diagonal() += out.noise.r;
  Eigen::LLT<Eigen::Matrix4d> llt(S);
  if (llt.info() != Eigen::Success) {
    throw DivergenceError("innovation covariance is not invertible");
  }
  const Eigen::Matrix<double, 8, 4> PHt = out.P.leftCols<4>();
  const Eigen::Matrix<double, 8, 4> K =
      llt.solve(PHt.transpose()).transpose();
  out.x += K * innovation;
  out.P -= K * PHt.transpose();
  out.P = 0.5 * (out.P + out.P.transpose());
  return out;
}

std::vector<BoundingBox> KfPredict(const KalmanState& s, int horizon) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  std::vector<BoundingBox> boxes;
  boxes.reserve(horizon);
  const KfMatrix F = KfTransition(1);
  KfVector x = s.x;
  for (int n = 0; n < horizon; ++n) {
    x = F * x;
    boxes.push_back(BoundingBox::FromCenter(x[0], x[1],
                                            std::max(x[2], kKfMinSize),
                                            std::max(x[3], kKfMinSize)));
  }
  return boxes;
}

std::vector<BoundingBox> ZeroMotionPredict(const BoundingBox& last,
                                           int horizon) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  return std::vector<BoundingBox>(static_cast<std::size_t>(horizon), last);
}

void ZeroMotionPredictor::Observe(FrameIndex, const BoundingBox& raw) {
  last_ = raw;
}

std::vector<BoundingBox> ZeroMotionPredictor::Predict(int horizon) {
  return ZeroMotionPredict(last_, horizon);
}

KalmanPredictor::KalmanPredictor(KalmanNoise noise, std::string name)
    : noise_(std::move(noise)), name_(std::move(name)) {
  noise_.Validate();
}

void KalmanPredictor::Observe(FrameIndex frame, const BoundingBox& raw) {
  if (!started_) {
    state_ = KalmanState::Init(raw, noise_);
    started_ = true;
  } else {
    state_ = KfUpdate(state_, raw, static_cast<int>(frame - last_frame_));
  }
  last_frame_ = frame;
}

std::vector<BoundingBox> KalmanPredictor::Predict(int horizon) {
  return KfPredict(state_, horizon);
}

}  // namespace latrack
