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

#ifndef LATRACK_MOTION_CODEC_H_
#define LATRACK_MOTION_CODEC_H_

#include <array>
#include <cstddef>
#include <vector>

#include "latrack/core.h"

namespace latrack {

// Scale-free box motion: center offset over the reference size, plus natural
// log size ratios. Layout [dx/w, dy/h, ln(w'/w), ln(h'/h)].
struct NormalizedMotion {
  std::array<double, 4> v{};

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  double dx_over_w() const { return v[0]; }
  double dy_over_h() const { return v[1]; }
  double log_w_ratio() const { return v[2]; }
  double log_h_ratio() const { return v[3]; }

  NormalizedMotion& operator+=(const NormalizedMotion& o);
  NormalizedMotion& operator*=(double s);

  friend bool operator==(const NormalizedMotion&,
                         const NormalizedMotion&) = default;
};

NormalizedMotion operator+(NormalizedMotion a, const NormalizedMotion& b);
NormalizedMotion operator*(NormalizedMotion a, double s);

// The last k processed-frame motions and the frame gaps they spanned.
struct MotionHistory {
  std::vector<NormalizedMotion> motions;
  std::vector<int> intervals;

  std::size_t size() const { return motions.size(); }
  void Validate() const;
};

// Motion from `prev` to `cur`, normalized by prev's size. Rejects boxes whose
// width or height is not above machine epsilon.
NormalizedMotion EncodeMotion(const BoundingBox& prev, const BoundingBox& cur);

// Inverse of EncodeMotion with `base` as the reference box.
BoundingBox ApplyMotion(const BoundingBox& base, const NormalizedMotion& m);

// Componentwise mean of motions[i] / intervals[i].
NormalizedMotion AverageSpeed(const MotionHistory& history);

// factor ⊙ speed.
NormalizedMotion ApplyFactor(const NormalizedMotion& factor,
                             const NormalizedMotion& speed);

// Builds the history from processed boxes and their frame indices, keeping
// the last `k` motions (fewer when the track is shorter).
MotionHistory HistoryFromTrack(const std::vector<BoundingBox>& boxes,
                               const std::vector<FrameIndex>& frames,
                               std::size_t k);

}  // namespace latrack

#endif  // LATRACK_MOTION_CODEC_H_
