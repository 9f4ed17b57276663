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

#include "latrack/stream_sim.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace latrack {

LatencyProfile LatencyProfile::Constant(double seconds) {
  LatencyProfile p;
  p.kind = LatencyKind::kConstant;
  p.mean = seconds;
  p.floor = 0.0;
  return p;
}

LatencyProfile LatencyProfile::Gaussian(double mean, double stddev,
                                        std::uint64_t seed, double floor) {
  LatencyProfile p;
  p.kind = LatencyKind::kGaussianTruncated;
  p.mean = mean;
  p.stddev = stddev;
  p.floor = floor;
  p.seed = seed;
  return p;
}

LatencyProfile LatencyProfile::Replay(std::vector<double> values) {
  LatencyProfile p;
  p.kind = LatencyKind::kReplay;
  p.floor = 0.0;
  p.replay_values = std::move(values);
  return p;
}

void LatencyProfile::Validate() const {
  if (!(floor >= 0.0)) throw ValidationError("latency floor must be >= 0");
  switch (kind) {
    case LatencyKind::kConstant:
      if (!(mean >= floor) || !std::isfinite(mean)) {
        throw ValidationError("constant latency must be finite and >= floor");
      }
      break;
    case LatencyKind::kGaussianTruncated:
      if (!std::isfinite(mean) || !(stddev >= 0.0)) {
        throw ValidationError("gaussian latency needs finite mean, stddev >= 0");
      }
      break;
    case LatencyKind::kReplay:
      if (replay_values.empty()) {
        throw ValidationError("replayed latency needs at least one value");
      }
      for (double v : replay_values) {
        if (!(v >= floor) || !std::isfinite(v)) {
          throw ValidationError("replayed latency below floor");
        }
      }
      break;
  }
}

LatencyProfile LatencyProfile::FromConfig(const KeyValueConfig& cfg,
                                          const std::string& prefix,
                                          const LatencyProfile& fallback) {
  if (!cfg.has(prefix + "kind") && !cfg.has(prefix + "mean") &&
      !cfg.has(prefix + "file")) {
    return fallback;
  }
  const std::string kind = cfg.GetString(prefix + "kind", "constant");
  LatencyProfile p;
  if (kind == "constant") {
    p = Constant(cfg.GetDouble(prefix + "mean", fallback.mean));
  } else if (kind == "gaussian" || kind == "gaussian_truncated") {
    p = Gaussian(cfg.GetDouble(prefix + "mean", fallback.mean),
                 cfg.GetDouble(prefix + "stddev", 0.0),
                 cfg.GetSeed(prefix + "seed", 0),
                 cfg.GetDouble(prefix + "floor", 1e-3));
  } else if (kind == "replay") {
    const std::string path = cfg.GetString(prefix + "file", "");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open latency replay file: " + path);
    std::vector<double> values;
    for (double v; in >> v;) values.push_back(v);
    p = Replay(std::move(values));
  } else {
    throw ValidationError("unknown latency kind: " + kind);
  }
  p.Validate();
  return p;
}

LatencySampler::LatencySampler(const LatencyProfile& profile)
    : profile_(profile), rng_(SplitSeed(profile.seed, "latency")) {
  profile_.Validate();
}

double LatencySampler::Next() {
  switch (profile_.kind) {
    case LatencyKind::kConstant:
      return profile_.mean;
    case LatencyKind::kGaussianTruncated: {
      std::normal_distribution<double> dist(profile_.mean, profile_.stddev);
      return std::max(profile_.floor, dist(rng_));
    }
    case LatencyKind::kReplay:
      if (replay_pos_ >= profile_.replay_values.size()) {
        throw ValidationError("replayed latency log exhausted after " +
                              std::to_string(replay_pos_) + " invocations");
      }
      return profile_.replay_values[replay_pos_++];
  }
  return profile_.mean;
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t\r"));
    tok.erase(tok.find_last_not_of(" \t\r") + 1);
    out.push_back(tok);
  }
  return out;
}

double ParseNumber(const std::string& s, std::size_t lineno) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("line " + std::to_string(lineno) + ": bad number '" +
                        s + "'");
}

}  // namespace

std::vector<TrackerLogRow> ReadTrackerLog(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  std::vector<TrackerLogRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitCsv(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
      for (const char* name :
           {"frame", "t_start", "t_finish", "x", "y", "w", "h"}) {
        if (!col.count(name)) {
          throw ValidationError(std::string("tracker log: missing column ") +
                                name);
        }
      }
      continue;
    }
    if (fields.size() < col.size()) {
      throw ValidationError("tracker log line " + std::to_string(lineno) +
                            ": too few fields");
    }
    auto get = [&](const char* name) {
      return ParseNumber(fields[col[name]], lineno);
    };
    TrackerLogRow row;
    row.frame = static_cast<FrameIndex>(get("frame"));
    row.t_start = get("t_start");
    row.t_finish = get("t_finish");
    row.box = {get("x"), get("y"), get("w"), get("h")};
    if (row.t_finish < row.t_start) {
      throw ValidationError("tracker log line " + std::to_string(lineno) +
                            ": t_finish before t_start");
    }
    rows.push_back(row);
  }
  if (col.empty()) throw ValidationError("tracker log: missing header");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].frame <= rows[i - 1].frame) {
      throw ValidationError("tracker log: frames must be strictly increasing");
    }
  }
  return rows;
}

std::vector<TrackerLogRow> ReadTrackerLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tracker log: " + path);
  return ReadTrackerLog(in);
}

void WriteTrackerLog(std::ostream& out,
                     const std::vector<TrackerLogRow>& rows) {
  out << std::setprecision(17) << "frame,t_start,t_finish,x,y,w,h\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << r.t_start << ',' << r.t_finish << ',' << r.box.x
        << ',' << r.box.y << ',' << r.box.w << ',' << r.box.h << '\n';
  }
}

TrackerAdapter TrackerAdapter::Oracle(double sigma_pos, double sigma_scale,
                                      std::uint64_t seed,
                                      LatencyProfile latency) {
  TrackerAdapter t;
  t.behavior = TrackerBehavior::kOracleNoisy;
  t.sigma_pos = sigma_pos;
  t.sigma_scale = sigma_scale;
  t.seed = seed;
  t.latency = std::move(latency);
  return t;
}

TrackerAdapter TrackerAdapter::FromLog(std::vector<TrackerLogRow> rows) {
  TrackerAdapter t;
  t.behavior = TrackerBehavior::kReplayLog;
  std::vector<double> durations;
  durations.reserve(rows.size());
  for (const auto& r : rows) durations.push_back(r.t_finish - r.t_start);
  t.latency = LatencyProfile::Replay(std::move(durations));
  t.replay = std::move(rows);
  return t;
}

TrackerAdapter TrackerAdapter::FromConfig(const KeyValueConfig& cfg) {
  const std::string behavior = cfg.GetString("tracker", "oracle_noisy");
  TrackerAdapter t;
  if (behavior == "oracle_noisy" || behavior == "oracle") {
    const auto seed = cfg.GetSeed("seed", 0);
    t = Oracle(cfg.GetDouble("sigma_pos", 0.0),
               cfg.GetDouble("sigma_scale", 0.0), seed,
               LatencyProfile::FromConfig(cfg, "latency.",
                                          LatencyProfile::Constant(0.05)));
    if (!cfg.has("latency.seed")) t.latency.seed = SplitSeed(seed, "tracker");
  } else if (behavior == "replay_log") {
    t = FromLog(ReadTrackerLog(cfg.GetString("log", "")));
  } else {
    throw ValidationError("unknown tracker behavior: " + behavior);
  }
  return t;
}

std::vector<FrameIndex> RunLog::processed_frames() const {
  std::vector<FrameIndex> out;
  out.reserve(processed.size());
  for (const auto& p : processed) out.push_back(p.frame);
  return out;
}

double RunLog::mean_predictor_latency() const {
  return predictor_invocations == 0
             ? 0.0
             : predictor_latency_total /
                   static_cast<double>(predictor_invocations);
}

RunLog RunLog::FromTrackerLog(const Sequence& seq,
                              const std::vector<TrackerLogRow>& rows) {
  seq.Validate();
  RunLog log;
  log.sequence = seq.name;
  log.framerate = seq.clock.framerate();
  log.num_frames = seq.size();
  log.initial_box = seq.initial_box();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& r = rows[j];
    if (r.frame >= seq.size()) {
      throw ValidationError("tracker log frame beyond sequence end");
    }
    log.processed.push_back({j, r.frame, r.t_start, r.t_finish});
    log.outputs.push_back({OutputKind::kRaw, r.frame, r.t_finish, r.box});
  }
  return log;
}

void WriteRunLog(std::ostream& out, const RunLog& log) {
  out << std::setprecision(17);
  out << "# sequence=" << log.sequence << '\n'
      << "# framerate=" << log.framerate << '\n'
      << "# num_frames=" << log.num_frames << '\n'
      << "# initial_box=" << log.initial_box.x << ' ' << log.initial_box.y
      << ' ' << log.initial_box.w << ' ' << log.initial_box.h << '\n'
      << "# predictor_invocations=" << log.predictor_invocations << '\n'
      << "# predictor_latency_total=" << log.predictor_latency_total << '\n';
  for (const auto& p : log.processed) {
    out << "# processed=" << p.j << ' ' << p.frame << ' ' << p.t_start << ' '
        << p.t_finish << '\n';
  }
  out << "kind,target_frame,available_at,x,y,w,h\n";
  for (const auto& o : log.outputs) {
    out << ToString(o.kind) << ',' << o.target_frame << ',' << o.available_at
        << ',' << o.box.x << ',' << o.box.y << ',' << o.box.w << ','
        << o.box.h << '\n';
  }
}

void WriteRunLog(const std::string& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  WriteRunLog(out, log);
  if (!out) throw IoError("write failed: " + path);
}

RunLog ReadRunLog(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      std::istringstream val(line.substr(eq + 1));
      if (key == "sequence") {
        log.sequence = line.substr(eq + 1);
      } else if (key == "framerate") {
        val >> log.framerate;
      } else if (key == "num_frames") {
        val >> log.num_frames;
      } else if (key == "initial_box") {
        val >> log.initial_box.x >> log.initial_box.y >> log.initial_box.w >>
            log.initial_box.h;
      } else if (key == "predictor_invocations") {
        val >> log.predictor_invocations;
      } else if (key == "predictor_latency_total") {
        val >> log.predictor_latency_total;
      } else if (key == "processed") {
        ProcessedFrame p;
        val >> p.j >> p.frame >> p.t_start >> p.t_finish;
        log.processed.push_back(p);
      }
      continue;
    }
    if (!header) {
      if (line.rfind("kind,target_frame,available_at", 0) != 0) {
        throw ValidationError("run log: unexpected header");
      }
      header = true;
      continue;
    }
    auto f = SplitCsv(line);
    if (f.size() != 7) {
      throw ValidationError("run log line " + std::to_string(lineno) +
                            ": expected 7 fields");
    }
    TimedOutput o;
    o.kind = ParseOutputKind(f[0]);
    o.target_frame = static_cast<FrameIndex>(ParseNumber(f[1], lineno));
    o.available_at = ParseNumber(f[2], lineno);
    o.box = {ParseNumber(f[3], lineno), ParseNumber(f[4], lineno),
             ParseNumber(f[5], lineno), ParseNumber(f[6], lineno)};
    log.outputs.push_back(o);
  }
  if (!header) throw ValidationError("run log: missing header");
  RequireValid(log.initial_box, "run log initial box");
  return log;
}

RunLog ReadRunLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run log: " + path);
  return ReadRunLog(in);
}

void WriteSchedule(std::ostream& out, const RunLog& log) {
  out << std::setprecision(17) << "j,frame,t_start,t_finish\n";
  for (const auto& p : log.processed) {
    out << p.j << ',' << p.frame << ',' << p.t_start << ',' << p.t_finish
        << '\n';
  }
}

std::optional<FrameIndex> NextFrame(const FrameClock& clock, double prev_finish,
                                    FrameIndex prev_frame,
                                    FrameIndex last_frame) {
  if (prev_frame >= last_frame) return std::nullopt;
  auto f = static_cast<FrameIndex>(
      std::max(0.0, std::floor(prev_finish * clock.framerate())));
  while (f > 0 && !AtOrBefore(clock.CaptureTime(f), prev_finish)) --f;
  while (AtOrBefore(clock.CaptureTime(f + 1), prev_finish)) ++f;
  if (f <= prev_frame) return prev_frame + 1;
  return std::min(f, last_frame);
}

namespace {

class TrackerInstance {
 public:
  TrackerInstance(const TrackerAdapter& cfg, const Sequence& seq)
      : cfg_(cfg), seq_(seq), rng_(SplitSeed(cfg.seed, "tracker-noise")) {
    for (std::size_t i = 0; i < cfg.replay.size(); ++i) {
      replay_index_[cfg.replay[i].frame] = i;
    }
  }

  BoundingBox Track(FrameIndex f) {
    if (cfg_.behavior == TrackerBehavior::kReplayLog) {
      auto it = replay_index_.find(f);
      if (it == replay_index_.end()) {
        throw ValidationError("replayed tracker log has no result for frame " +
                              std::to_string(f));
      }
      return cfg_.replay[it->second].box;
    }
    if (f == 0) return seq_.initial_box();
    FrameIndex g = f;
    while (!seq_.ground_truth[g]) --g;
    BoundingBox b = *seq_.ground_truth[g];
    std::normal_distribution<double> unit(0.0, 1.0);
    // Draw all four regardless of sigma so the stream stays aligned.
    const double nx = unit(rng_), ny = unit(rng_);
    const double nw = unit(rng_), nh = unit(rng_);
    b.x += cfg_.sigma_pos * nx;
    b.y += cfg_.sigma_pos * ny;
    b.w *= std::exp(cfg_.sigma_scale * nw);
    b.h *= std::exp(cfg_.sigma_scale * nh);
    return b;
  }

 private:
  const TrackerAdapter& cfg_;
  const Sequence& seq_;
  Rng rng_;
  std::map<FrameIndex, std::size_t> replay_index_;
};

}  // namespace

RunLog RunStream(const Sequence& seq, const TrackerAdapter& tracker,
                 const PredictorAdapter* predictor) {
  seq.Validate();
  const FrameClock& clock = seq.clock;
  const FrameIndex last = seq.size() - 1;

  RunLog log;
  log.sequence = seq.name;
  log.framerate = clock.framerate();
  log.num_frames = seq.size();
  log.initial_box = seq.initial_box();

  TrackerInstance trk(tracker, seq);
  LatencySampler trk_latency(tracker.latency);
  std::unique_ptr<Predictor> pred;
  std::optional<LatencySampler> pred_latency;
  if (predictor) {
    if (predictor->horizon < 1) {
      throw ValidationError("predictor horizon must be >= 1");
    }
    pred = predictor->make();
    pred_latency.emplace(predictor->latency);
  }

  auto track = [&](FrameIndex f, double t_start) {
    const double t_finish = t_start + trk_latency.Next();
    const BoundingBox box = trk.Track(f);
    log.processed.push_back({log.processed.size(), f, t_start, t_finish});
    log.outputs.push_back({OutputKind::kRaw, f, t_finish, box});
    if (pred) pred->Observe(f, box);
    return t_finish;
  };

  double finish = track(0, 0.0);
  FrameIndex prev = 0;
  while (auto next = NextFrame(clock, finish, prev, last)) {
    double start = std::max(finish, clock.CaptureTime(*next));
    if (pred) {
      const double lp = pred_latency->Next();
      const auto boxes = pred->Predict(predictor->horizon);
      if (boxes.size() != static_cast<std::size_t>(predictor->horizon)) {
        throw ValidationError("predictor returned wrong number of boxes");
      }
      for (int n = 0; n < predictor->horizon; ++n) {
        log.outputs.push_back({OutputKind::kPredicted,
                               prev + static_cast<FrameIndex>(n + 1),
                               start + lp, boxes[n]});
      }
      ++log.predictor_invocations;
      log.predictor_latency_total += lp;
      start += lp;
    }
    finish = track(*next, start);
    prev = *next;
  }
  return log;
}

int PickHorizon(const Sequence& seq, const TrackerAdapter& tracker,
                int trials) {
  if (trials < 1) throw ValidationError("horizon trials must be >= 1");
  int worst = 1;
  for (int t = 0; t < trials; ++t) {
    TrackerAdapter trial = tracker;
    trial.seed = SplitSeed(tracker.seed, static_cast<std::uint64_t>(t));
    trial.latency.seed =
        SplitSeed(tracker.latency.seed, static_cast<std::uint64_t>(t));
    const RunLog log = RunStream(seq, trial);
    for (std::size_t j = 1; j < log.processed.size(); ++j) {
      worst = std::max(worst, static_cast<int>(log.processed[j].frame -
                                                log.processed[j - 1].frame));
    }
  }
  return worst;
}

}  // namespace latrack
