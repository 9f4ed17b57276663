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

#include "latrack/motion_codec.h"

#include <cmath>
#include <limits>

namespace latrack {

NormalizedMotion& NormalizedMotion::operator+=(const NormalizedMotion& o) {
  for (std::size_t i = 0; i < 4; ++i) v[i] += o.v[i];
  return *this;
}

NormalizedMotion& NormalizedMotion::operator*=(double s) {
  for (double& x : v) x *= s;
  return *this;
}

NormalizedMotion operator+(NormalizedMotion a, const NormalizedMotion& b) {
  return a += b;
}

NormalizedMotion operator*(NormalizedMotion a, double s) { return a *= s; }

void MotionHistory::Validate() const {
  if (motions.size() != intervals.size()) {
    throw ValidationError("motion history: motions/intervals length mismatch");
  }
  for (int gap : intervals) {
    if (gap < 1) throw ValidationError("motion history: interval < 1");
  }
  for (const auto& m : motions) {
    for (double x : m.v) {
      if (!std::isfinite(x)) {
        throw ValidationError("motion history: non-finite motion");
      }
    }
  }
}

namespace {

void RequireEncodable(const BoundingBox& b, const char* what) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  RequireValid(b, what);
  if (b.w <= kEps || b.h <= kEps) {
    throw ValidationError(std::string(what) + " has degenerate size");
  }
}

}  // namespace

NormalizedMotion EncodeMotion(const BoundingBox& prev, const BoundingBox& cur) {
  RequireEncodable(prev, "previous box");
  RequireEncodable(cur, "current box");
  return {{(cur.cx() - prev.cx()) / prev.w, (cur.cy() - prev.cy()) / prev.h,
           std::log(cur.w / prev.w), std::log(cur.h / prev.h)}};
}

BoundingBox ApplyMotion(const BoundingBox& base, const NormalizedMotion& m) {
  const double cx = base.cx() + m[0] * base.w;
  const double cy = base.cy() + m[1] * base.h;
  const double w = base.w * std::exp(m[2]);
  const double h = base.h * std::exp(m[3]);
  return BoundingBox::FromCenter(cx, cy, w, h);
}

NormalizedMotion AverageSpeed(const MotionHistory& history) {
  history.Validate();
  if (history.motions.empty()) {
    throw ValidationError("average speed of an empty history");
  }
  NormalizedMotion sum;
  for (std::size_t i = 0; i < history.size(); ++i) {
    sum += history.motions[i] * (1.0 / history.intervals[i]);
  }
  return sum * (1.0 / static_cast<double>(history.size()));
}

NormalizedMotion ApplyFactor(const NormalizedMotion& factor,
                             const NormalizedMotion& speed) {
  NormalizedMotion out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = factor[i] * speed[i];
  return out;
}

MotionHistory HistoryFromTrack(const std::vector<BoundingBox>& boxes,
                               const std::vector<FrameIndex>& frames,
                               std::size_t k) {
  if (boxes.size() != frames.size()) {
    throw ValidationError("track boxes/frames length mismatch");
  }
  MotionHistory h;
  if (boxes.size() < 2 || k == 0) return h;
  const std::size_t n_motions = boxes.size() - 1;
  const std::size_t first = n_motions > k ? n_motions - k : 0;
  for (std::size_t i = first + 1; i < boxes.size(); ++i) {
    if (frames[i] <= frames[i - 1]) {
      throw ValidationError("track frames must be strictly increasing");
    }
    h.motions.push_back(EncodeMotion(boxes[i - 1], boxes[i]));
    h.intervals.push_back(static_cast<int>(frames[i] - frames[i - 1]));
  }
  return h;
}

}  // namespace latrack
