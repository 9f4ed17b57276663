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

#ifndef LATRACK_CORE_H_
#define LATRACK_CORE_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latrack {

using FrameIndex = std::size_t;

// Error categories map onto distinct CLI exit codes.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Axis-aligned box, top-left anchored, in pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const;

  static BoundingBox FromCenter(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

std::ostream& operator<<(std::ostream& os, const BoundingBox& b);

// Throws ValidationError unless w, h > 0 and every field is finite.
void RequireValid(const BoundingBox& b, const char* what = "box");

class FrameClock {
 public:
  explicit FrameClock(double framerate = 30.0);

  double framerate() const { return framerate_; }
  double period() const { return 1.0 / framerate_; }

  // World timestamp of frame f: f / framerate.
  double CaptureTime(FrameIndex f) const {
    return static_cast<double>(f) / framerate_;
  }

 private:
  double framerate_;
};

inline double CaptureTime(const FrameClock& clock, FrameIndex f) {
  return clock.CaptureTime(f);
}

enum class OutputKind : std::uint8_t { kRaw, kPredicted };

const char* ToString(OutputKind kind);
OutputKind ParseOutputKind(const std::string& s);

struct TimedOutput {
  OutputKind kind = OutputKind::kRaw;
  FrameIndex target_frame = 0;
  double available_at = 0.0;
  BoundingBox box;

  friend bool operator==(const TimedOutput&, const TimedOutput&) = default;
};

struct Sequence {
  std::string name;
  FrameClock clock;
  // One slot per frame; nullopt marks a missing annotation.
  std::vector<std::optional<BoundingBox>> ground_truth;

  std::size_t size() const { return ground_truth.size(); }
  bool annotated(FrameIndex f) const { return ground_truth.at(f).has_value(); }
  const BoundingBox& initial_box() const;

  // Length >= 2 and frame 0 annotated.
  void Validate() const;

  static Sequence FromBoxes(std::string name, const FrameClock& clock,
                            const std::vector<BoundingBox>& boxes);
};

double IoU(const BoundingBox& a, const BoundingBox& b);
double CenterError(const BoundingBox& a, const BoundingBox& b);

// Ground-truth text: one "x,y,w,h" line per frame. Blank lines and NaN rows
// are recorded as missing frames.
Sequence ParseGroundTruth(std::istream& in, std::string name,
                          const FrameClock& clock);
Sequence ReadGroundTruth(const std::string& path, const FrameClock& clock);
void WriteGroundTruth(std::ostream& out, const Sequence& seq);
void WriteGroundTruth(const std::string& path, const Sequence& seq);

}  // namespace latrack

#endif  // LATRACK_CORE_H_
