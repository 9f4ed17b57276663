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

#include "latrack/latency_eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace latrack {

PermittedLatency::PermittedLatency(double sigma) : sigma_(sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw ValidationError("permitted latency must lie in [0, 1)");
  }
}

const std::vector<double>& SigmaGrid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g(kSigmaGridSize);
    for (std::size_t i = 0; i < kSigmaGridSize; ++i) {
      g[i] = static_cast<double>(i) / 50.0;
    }
    return g;
  }();
  return grid;
}

OutputIndex::OutputIndex(const RunLog& log)
    : outputs_(log.outputs), initial_box_(log.initial_box) {
  std::vector<std::size_t> order(outputs_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return outputs_[a].available_at < outputs_[b].available_at;
  });
  for (std::size_t idx : order) {
    const double t = outputs_[idx].available_at;
    if (groups_.empty() || groups_.back().time != t) {
      groups_.push_back({t, {}});
    }
    groups_.back().by_target.push_back(idx);
  }
  for (auto& g : groups_) {
    std::stable_sort(g.by_target.begin(), g.by_target.end(),
                     [&](auto a, auto b) {
                       return outputs_[a].target_frame <
                              outputs_[b].target_frame;
                     });
  }
}

MatchedEstimate OutputIndex::Match(FrameIndex frame, double deadline) const {
  MatchedEstimate m;
  m.frame = frame;
  m.estimate = initial_box_;
  auto it = std::upper_bound(
      groups_.begin(), groups_.end(), deadline + kTimeTolerance,
      [](double t, const Group& g) { return t < g.time; });
  if (it == groups_.begin()) return m;
  const Group& g = *std::prev(it);
  // Last entry with target <= frame; otherwise the largest target.
  auto pos = std::upper_bound(
      g.by_target.begin(), g.by_target.end(), frame,
      [&](FrameIndex f, std::size_t idx) {
        return f < outputs_[idx].target_frame;
      });
  const std::size_t pick =
      pos == g.by_target.begin() ? g.by_target.back() : *std::prev(pos);
  const TimedOutput& out = outputs_[pick];
  m.estimate = out.box;
  m.source = out.kind == OutputKind::kRaw ? MatchSource::kRaw
                                          : MatchSource::kPredicted;
  m.matched_target = out.target_frame;
  m.matched_time = out.available_at;
  return m;
}

MatchedEstimate MatchElae(const RunLog& log, FrameIndex frame,
                          PermittedLatency sigma) {
  const FrameClock clock = log.clock();
  const double deadline = clock.CaptureTime(frame) + sigma.slack_seconds(clock);
  return OutputIndex(log).Match(frame, deadline);
}

MatchedEstimate MatchLae(const RunLog& log, FrameIndex frame) {
  return MatchElae(log, frame, PermittedLatency(0.0));
}

RunScore ScoreEstimates(const Sequence& seq,
                        const std::vector<BoundingBox>& estimates) {
  if (estimates.size() != seq.size()) {
    throw ValidationError("estimate count does not match sequence length");
  }
  RunScore s;
  std::size_t within = 0;
  std::size_t beaten = 0;  // (frame, threshold) pairs with IoU > threshold
  for (FrameIndex f = 0; f < seq.size(); ++f) {
    if (!seq.ground_truth[f]) continue;
    const BoundingBox& gt = *seq.ground_truth[f];
    ++s.frames;
    if (CenterError(gt, estimates[f]) <= kDistancePrecisionPx) ++within;
    const double iou = IoU(gt, estimates[f]);
    for (int i = 0; i < kIouThresholdCount; ++i) {
      if (iou > static_cast<double>(i) / 20.0) ++beaten;
    }
  }
  if (s.frames == 0) {
    throw ValidationError("sequence '" + seq.name + "' has no annotations");
  }
  const double n = static_cast<double>(s.frames);
  s.dp = static_cast<double>(within) / n;
  s.auc = static_cast<double>(beaten) / (n * kIouThresholdCount);
  return s;
}

namespace {

void RequirePaired(const Sequence& seq, const RunLog& log) {
  if (log.num_frames != seq.size()) {
    throw ValidationError("run log for '" + log.sequence + "' covers " +
                          std::to_string(log.num_frames) +
                          " frames but sequence '" + seq.name + "' has " +
                          std::to_string(seq.size()));
  }
}

RunScore ScoreWithIndex(const Sequence& seq, const OutputIndex& index,
                        double sigma) {
  const FrameClock& clock = seq.clock;
  const double slack = PermittedLatency(sigma).slack_seconds(clock);
  std::vector<BoundingBox> estimates(seq.size());
  for (FrameIndex f = 0; f < seq.size(); ++f) {
    estimates[f] = index.Match(f, clock.CaptureTime(f) + slack).estimate;
  }
  return ScoreEstimates(seq, estimates);
}

void Reduce(SweepResult& r) {
  const auto& grid = SigmaGrid();
  const double n_seq = static_cast<double>(r.per_sequence.size());
  for (auto* curve : {&r.auc, &r.dp}) {
    curve->sigma_grid = grid;
    curve->values.assign(grid.size(), 0.0);
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double auc = 0.0, dp = 0.0;
    for (const auto& row : r.per_sequence) {
      auc += row[g].auc;
      dp += row[g].dp;
    }
    r.auc.values[g] = auc / n_seq;
    r.dp.values[g] = dp / n_seq;
  }
  for (auto* curve : {&r.auc, &r.dp}) {
    double sum = 0.0;
    for (double v : curve->values) sum += v;
    curve->aggregate = sum / static_cast<double>(grid.size());
  }
}

SweepResult PrepareSweep(const std::vector<Sequence>& seqs,
                         const std::vector<RunLog>& logs) {
  if (seqs.empty()) throw ValidationError("sweep over an empty sequence set");
  if (seqs.size() != logs.size()) {
    throw ValidationError("sweep needs exactly one log per sequence");
  }
  SweepResult r;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    RequirePaired(seqs[s], logs[s]);
    r.names.push_back(seqs[s].name);
  }
  r.per_sequence.assign(seqs.size(),
                        std::vector<RunScore>(SigmaGrid().size()));
  return r;
}

}  // namespace

RunScore ScoreRun(const Sequence& seq, const RunLog& log,
                  PermittedLatency sigma) {
  RequirePaired(seq, log);
  return ScoreWithIndex(seq, OutputIndex(log), sigma.sigma());
}

SweepResult Sweep(const std::vector<Sequence>& seqs,
                  const std::vector<RunLog>& logs) {
  SweepResult r = PrepareSweep(seqs, logs);
  const auto& grid = SigmaGrid();
  std::vector<OutputIndex> indices;
  indices.reserve(logs.size());
  for (const auto& log : logs) indices.emplace_back(log);

  const long long n_seq = static_cast<long long>(seqs.size());
  const long long n_grid = static_cast<long long>(grid.size());
  const long long total = n_seq * n_grid;
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < total; ++i) {
    const auto s = static_cast<std::size_t>(i / n_grid);
    const auto g = static_cast<std::size_t>(i % n_grid);
    r.per_sequence[s][g] = ScoreWithIndex(seqs[s], indices[s], grid[g]);
  }
  Reduce(r);
  return r;
}

SweepResult SweepSerial(const std::vector<Sequence>& seqs,
                        const std::vector<RunLog>& logs) {
  SweepResult r = PrepareSweep(seqs, logs);
  const auto& grid = SigmaGrid();
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const OutputIndex index(logs[s]);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      r.per_sequence[s][g] = ScoreWithIndex(seqs[s], index, grid[g]);
    }
  }
  Reduce(r);
  return r;
}

void WriteCurvesCsv(std::ostream& out, const SweepResult& r) {
  out << "sigma,auc,dp\n";
  for (std::size_t g = 0; g < r.auc.sigma_grid.size(); ++g) {
    out << std::fixed << std::setprecision(2) << r.auc.sigma_grid[g] << ','
        << std::setprecision(10) << r.auc.values[g] << ',' << r.dp.values[g]
        << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

std::string SummaryJson(const SweepResult& r, const std::string& manifest) {
  nlohmann::ordered_json j;
  j["mAUC"] = r.auc.aggregate;
  j["mDP"] = r.dp.aggregate;
  j["AUC@La0"] = r.auc.values.front();
  j["DP@La0"] = r.dp.values.front();
  if (!manifest.empty()) j["manifest"] = manifest;
  auto& seqs = j["sequences"] = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < r.per_sequence.size(); ++s) {
    const auto& row = r.per_sequence[s];
    double mauc = 0.0, mdp = 0.0;
    for (const auto& sc : row) {
      mauc += sc.auc;
      mdp += sc.dp;
    }
    seqs.push_back({{"name", r.names[s]},
                    {"frames", row.front().frames},
                    {"mAUC", mauc / static_cast<double>(row.size())},
                    {"mDP", mdp / static_cast<double>(row.size())},
                    {"AUC@La0", row.front().auc},
                    {"DP@La0", row.front().dp}});
  }
  return j.dump(2);
}

void WriteCurvesSvg(std::ostream& out, const SweepResult& r,
                    const std::string& title) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 40,
                   kBottom = 50;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double sigma) { return kLeft + sigma * pw; };
  auto py = [&](double v) { return kTop + (1.0 - v) * ph; };
  auto polyline = [&](const EvalCurve& c) {
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(2);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      pts << px(c.sigma_grid[i]) << ',' << py(c.values[i]) << ' ';
    }
    return pts.str();
  };
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">"
      << title << "</text>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(v) << "\" x2=\""
        << px(1) << "\" y2=\"" << py(v) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\">" << v << "</text>\n";
    out << "<text x=\"" << px(v) << "\" y=\"" << kH - kBottom + 18
        << "\" text-anchor=\"middle\">" << v << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">permitted latency (frames)</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" "
         "points=\""
      << polyline(r.auc) << "\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#2471a3\" stroke-width=\"2\" "
         "points=\""
      << polyline(r.dp) << "\"/>\n";
  out << std::setprecision(3);
  out << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16
      << "\" fill=\"#c0392b\">AUC (mAUC " << r.auc.aggregate << ")</text>\n";
  out << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 32
      << "\" fill=\"#2471a3\">DP (mDP " << r.dp.aggregate << ")</text>\n";
  out << "</svg>\n";
  out.unsetf(std::ios::floatfield);
}

}  // namespace latrack
