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

#include "latrack/core.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace latrack {

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
  return os << "(" << b.x << ", " << b.y << ", " << b.w << ", " << b.h << ")";
}

void RequireValid(const BoundingBox& b, const char* what) {
  if (!b.valid()) {
    std::ostringstream msg;
    msg << what << " is not a valid box: " << b;
    throw ValidationError(msg.str());
  }
}

FrameClock::FrameClock(double framerate) : framerate_(framerate) {
  if (!(framerate > 0.0) || !std::isfinite(framerate)) {
    throw ValidationError("framerate must be positive and finite");
  }
}

const char* ToString(OutputKind kind) {
  return kind == OutputKind::kRaw ? "raw" : "predicted";
}

OutputKind ParseOutputKind(const std::string& s) {
  if (s == "raw") return OutputKind::kRaw;
  if (s == "predicted") return OutputKind::kPredicted;
  throw ValidationError("unknown output kind: " + s);
}

const BoundingBox& Sequence::initial_box() const {
  if (ground_truth.empty() || !ground_truth.front()) {
    throw ValidationError("sequence '" + name + "' has no initial box");
  }
  return *ground_truth.front();
}

void Sequence::Validate() const {
  if (ground_truth.size() < 2) {
    throw ValidationError("sequence '" + name + "' needs at least 2 frames");
  }
  RequireValid(initial_box(), "initial box");
  for (const auto& gt : ground_truth) {
    if (gt) RequireValid(*gt, "ground-truth box");
  }
}

Sequence Sequence::FromBoxes(std::string name, const FrameClock& clock,
                             const std::vector<BoundingBox>& boxes) {
  Sequence seq{std::move(name), clock, {}};
  seq.ground_truth.assign(boxes.begin(), boxes.end());
  return seq;
}

double IoU(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  // Areas from edge differences, like the intersection, so that IoU(a, a)
  // is exactly 1.
  const double area_a = ((a.x + a.w) - a.x) * ((a.y + a.h) - a.y);
  const double area_b = ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
  const double inter = ix * iy;
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double CenterError(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Sequence ParseGroundTruth(std::istream& in, std::string name,
                          const FrameClock& clock) {
  Sequence seq{std::move(name), clock, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty()) {
      seq.ground_truth.emplace_back();
      continue;
    }
    // UAV123 uses commas; some OTB files use tabs or spaces.
    std::replace_if(line.begin(), line.end(),
                    [](char c) { return c == ',' || c == '\t'; }, ' ');
    std::istringstream fields(line);
    double v[4];
    std::string tok;
    bool missing = false;
    for (int i = 0; i < 4; ++i) {
      if (!(fields >> tok)) {
        throw ValidationError(seq.name + ":" + std::to_string(lineno) +
                              ": expected 4 fields");
      }
      try {
        v[i] = std::stod(tok);
      } catch (const std::exception&) {
        throw ValidationError(seq.name + ":" + std::to_string(lineno) +
                              ": bad number '" + tok + "'");
      }
      if (std::isnan(v[i])) missing = true;
    }
    if (missing) {
      seq.ground_truth.emplace_back();
    } else {
      BoundingBox box{v[0], v[1], v[2], v[3]};
      // Zero-size annotations mark occluded frames in UAV123.
      if (box.valid()) {
        seq.ground_truth.emplace_back(box);
      } else {
        seq.ground_truth.emplace_back();
      }
    }
  }
  return seq;
}

Sequence ReadGroundTruth(const std::string& path, const FrameClock& clock) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground truth: " + path);
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) {
    name = name.substr(0, dot);
  }
  return ParseGroundTruth(in, name, clock);
}

void WriteGroundTruth(std::ostream& out, const Sequence& seq) {
  out << std::setprecision(17);
  for (const auto& gt : seq.ground_truth) {
    if (gt) {
      out << gt->x << ',' << gt->y << ',' << gt->w << ',' << gt->h << '\n';
    } else {
      out << "NaN,NaN,NaN,NaN\n";
    }
  }
}

void WriteGroundTruth(const std::string& path, const Sequence& seq) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  WriteGroundTruth(out, seq);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace latrack
