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

#include "latrack/trainer.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace latrack {

const char* ToString(MotionKind kind) {
  switch (kind) {
    case MotionKind::kConstantVelocity:
      return "constant_velocity";
    case MotionKind::kConstantAcceleration:
      return "constant_acceleration";
    case MotionKind::kSinusoidal:
      return "sinusoidal";
    case MotionKind::kRandomWalk:
      return "random_walk";
  }
  return "?";
}

MotionKind ParseMotionKind(const std::string& s) {
  for (auto kind :
       {MotionKind::kConstantVelocity, MotionKind::kConstantAcceleration,
        MotionKind::kSinusoidal, MotionKind::kRandomWalk}) {
    if (s == ToString(kind)) return kind;
  }
  throw ValidationError("unknown motion kind: " + s);
}

void SyntheticSpec::Validate() const {
  if (duration < 2) {
    throw ValidationError("synthetic duration must be >= 2 frames");
  }
  if (!(framerate > 0.0)) throw ValidationError("framerate must be > 0");
  for (const Range* r : {&center, &size, &vx, &vy, &ax, &ay, &amplitude,
                         &period, &phase, &size_drift}) {
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
      throw ValidationError("synthetic range must satisfy lo <= hi");
    }
  }
  if (!(size.lo > 0.0)) throw ValidationError("initial size must be > 0");
  if (kind == MotionKind::kSinusoidal && !(period.lo > 0.0)) {
    throw ValidationError("sinusoid period must be > 0");
  }
  if (!(noise >= 0.0) || !(walk_sigma >= 0.0)) {
    throw ValidationError("noise levels must be >= 0");
  }
}

namespace {

Range GetRange(const KeyValueConfig& cfg, const std::string& key,
               Range fallback) {
  auto v = cfg.GetDoubles(key, {fallback.lo, fallback.hi});
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() != 2) {
    throw ValidationError("config key '" + key + "' expects lo,hi");
  }
  return {v[0], v[1]};
}

}  // namespace

SyntheticSpec SyntheticSpec::FromConfig(const KeyValueConfig& cfg) {
  SyntheticSpec s;
  s.kind = ParseMotionKind(cfg.GetString("kind", ToString(s.kind)));
  s.duration = static_cast<int>(cfg.GetInt("duration", s.duration));
  s.framerate = cfg.GetDouble("framerate", s.framerate);
  s.center = GetRange(cfg, "center", s.center);
  s.size = GetRange(cfg, "size", s.size);
  s.vx = GetRange(cfg, "vx", s.vx);
  s.vy = GetRange(cfg, "vy", s.vy);
  s.ax = GetRange(cfg, "ax", s.ax);
  s.ay = GetRange(cfg, "ay", s.ay);
  s.amplitude = GetRange(cfg, "amplitude", s.amplitude);
  s.period = GetRange(cfg, "period", s.period);
  s.phase = GetRange(cfg, "phase", s.phase);
  s.size_drift = GetRange(cfg, "size_drift", s.size_drift);
  s.walk_sigma = cfg.GetDouble("walk_sigma", s.walk_sigma);
  s.noise = cfg.GetDouble("noise", s.noise);
  s.seed = cfg.GetSeed("seed", 0);
  s.prefix = cfg.GetString("prefix", s.prefix);
  s.Validate();
  return s;
}

std::vector<Sequence> GenSynthetic(const SyntheticSpec& spec, int count) {
  spec.Validate();
  if (count < 0) throw ValidationError("sequence count must be >= 0");
  std::vector<Sequence> out(static_cast<std::size_t>(count));
  const FrameClock clock(spec.framerate);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    Rng rng(SplitSeed(spec.seed, static_cast<std::uint64_t>(i)));
    auto draw = [&](const Range& r) {
      if (r.lo == r.hi) return r.lo;
      return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };
    const double cx0 = draw(spec.center), cy0 = draw(spec.center);
    const double w0 = draw(spec.size), h0 = draw(spec.size);
    const double vx = draw(spec.vx), vy = draw(spec.vy);
    const double ax = draw(spec.ax), ay = draw(spec.ay);
    const double amp_x = draw(spec.amplitude), amp_y = draw(spec.amplitude);
    const double per_x = draw(spec.period), per_y = draw(spec.period);
    const double ph_x = draw(spec.phase), ph_y = draw(spec.phase);
    const double dw = draw(spec.size_drift), dh = draw(spec.size_drift);
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<BoundingBox> boxes;
    boxes.reserve(static_cast<std::size_t>(spec.duration));
    double wx = vx, wy = vy, px = cx0, py = cy0;
    constexpr double kTwoPi = 6.283185307179586;
    for (int f = 0; f < spec.duration; ++f) {
      const double t = f;
      double cx = cx0, cy = cy0;
      switch (spec.kind) {
        case MotionKind::kConstantVelocity:
          cx += vx * t;
          cy += vy * t;
          break;
        case MotionKind::kConstantAcceleration:
          cx += vx * t + 0.5 * ax * t * t;
          cy += vy * t + 0.5 * ay * t * t;
          break;
        case MotionKind::kSinusoidal:
          cx += amp_x * (std::sin(kTwoPi * t / per_x + ph_x) - std::sin(ph_x));
          cy += amp_y * (std::sin(kTwoPi * t / per_y + ph_y) - std::sin(ph_y));
          break;
        case MotionKind::kRandomWalk:
          if (f > 0) {
            wx += spec.walk_sigma * unit(rng);
            wy += spec.walk_sigma * unit(rng);
            px += wx;
            py += wy;
          }
          cx = px;
          cy = py;
          break;
      }
      const double w = w0 * std::exp(dw * t);
      const double h = h0 * std::exp(dh * t);
      BoundingBox b = BoundingBox::FromCenter(cx, cy, w, h);
      if (spec.noise > 0.0 && f > 0) {
        b.x += spec.noise * unit(rng);
        b.y += spec.noise * unit(rng);
      }
      boxes.push_back(b);
    }
    std::ostringstream name;
    name << spec.prefix << '_' << ToString(spec.kind) << '_'
         << std::setw(3) << std::setfill('0') << i;
    out[static_cast<std::size_t>(i)] =
        Sequence::FromBoxes(name.str(), clock, boxes);
  }
  return out;
}

std::vector<TrainSample> SampleWindows(const std::vector<BoundingBox>& traj,
                                       const SamplerConfig& cfg,
                                       std::uint64_t seed) {
  if (cfg.k < 1 || cfg.horizon < 1 || cfg.strides.empty() ||
      cfg.anchor_step < 1) {
    throw ValidationError("sampler needs k, N, anchor step >= 1 and strides");
  }
  for (int s : cfg.strides) {
    if (s < 1) throw ValidationError("sampler strides must be >= 1");
  }
  const int max_stride =
      *std::max_element(cfg.strides.begin(), cfg.strides.end());
  const long long len = static_cast<long long>(traj.size());
  const long long first = static_cast<long long>(cfg.k) * max_stride;
  const long long last = len - 1 - cfg.horizon;
  if (first > last) {
    throw ValidationError("trajectory too short: need " +
                          std::to_string(first + cfg.horizon + 1) +
                          " frames, have " + std::to_string(len));
  }
  Rng rng(SplitSeed(seed, "windows"));
  std::uniform_int_distribution<std::size_t> pick(0, cfg.strides.size() - 1);
  std::vector<TrainSample> out;
  for (long long a = first; a <= last; a += cfg.anchor_step) {
    TrainSample s;
    std::vector<long long> frames{a};
    for (int i = 0; i < cfg.k; ++i) {
      frames.push_back(frames.back() - cfg.strides[pick(rng)]);
    }
    std::reverse(frames.begin(), frames.end());
    for (int i = 1; i <= cfg.k; ++i) {
      s.history.motions.push_back(
          EncodeMotion(traj[frames[i - 1]], traj[frames[i]]));
      s.history.intervals.push_back(static_cast<int>(frames[i] - frames[i - 1]));
    }
    s.latest_box = traj[a];
    for (int n = 1; n <= cfg.horizon; ++n) {
      s.targets.push_back(EncodeMotion(traj[a], traj[a + n]));
    }
    s.speed = AverageSpeed(s.history);
    s.input = PmInput::FromHistory(s.history, cfg.k);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainSample> SampleSequences(const std::vector<Sequence>& seqs,
                                         const SamplerConfig& cfg,
                                         std::uint64_t seed) {
  std::vector<std::vector<BoundingBox>> trajs;
  trajs.reserve(seqs.size());
  for (const auto& seq : seqs) {
    auto& boxes = trajs.emplace_back();
    for (const auto& gt : seq.ground_truth) {
      if (!gt) {
        throw ValidationError("training sequence '" + seq.name +
                              "' must be fully annotated");
      }
      boxes.push_back(*gt);
    }
  }
  std::vector<std::vector<TrainSample>> parts(seqs.size());
  std::vector<std::exception_ptr> errors(seqs.size());
  const long long n = static_cast<long long>(seqs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      parts[u] = SampleWindows(trajs[u], cfg, SplitSeed(seed, u));
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<TrainSample> out;
  for (auto& p : parts) {
    std::move(p.begin(), p.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<BoundingBox> HistoryBoxes(const TrainSample& s) {
  std::vector<BoundingBox> boxes{s.latest_box};
  for (std::size_t i = s.history.size(); i-- > 0;) {
    const auto& m = s.history.motions[i];
    const BoundingBox& cur = boxes.back();
    const double w = cur.w / std::exp(m[2]);
    const double h = cur.h / std::exp(m[3]);
    boxes.push_back(
        BoundingBox::FromCenter(cur.cx() - m[0] * w, cur.cy() - m[1] * h, w, h));
  }
  std::reverse(boxes.begin(), boxes.end());
  return boxes;
}

TrainSample TruncateHistory(const TrainSample& s, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > s.history.size()) {
    throw ValidationError("cannot keep " + std::to_string(k) + " of " +
                          std::to_string(s.history.size()) + " history steps");
  }
  TrainSample out = s;
  const auto drop = static_cast<std::ptrdiff_t>(s.history.size()) - k;
  out.history.motions.erase(out.history.motions.begin(),
                            out.history.motions.begin() + drop);
  out.history.intervals.erase(out.history.intervals.begin(),
                              out.history.intervals.begin() + drop);
  out.speed = AverageSpeed(out.history);
  out.input = PmInput::FromHistory(out.history, k);
  return out;
}

void SplitByTrajectory(const std::vector<Sequence>& all, double val_fraction,
                       std::uint64_t seed, std::vector<Sequence>* train,
                       std::vector<Sequence>* val) {
  if (all.size() < 2) {
    throw ValidationError("need at least 2 trajectories to split");
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(SplitSeed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(all.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, all.size() - 1);
  std::vector<bool> is_val(all.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  train->clear();
  val->clear();
  for (std::size_t i = 0; i < all.size(); ++i) {
    (is_val[i] ? val : train)->push_back(all[i]);
  }
}

void OptimizerConfig::Validate() const {
  if (!(lr > 0.0) || epochs < 0 || batch_size < 1) {
    throw ValidationError("optimizer needs lr > 0, epochs >= 0, batch >= 1");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("optimizer betas must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] < 1 || (i > 0 && milestones[i] <= milestones[i - 1])) {
      throw ValidationError("lr milestones must be positive and increasing");
    }
  }
}

double OptimizerConfig::LearningRate(int epoch) const {
  double lr_e = lr;
  for (int m : milestones) {
    if (epoch >= m) lr_e *= gamma;
  }
  return lr_e;
}

AdamW::AdamW(std::size_t size, const OptimizerConfig& cfg)
    : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::Step(std::span<double> params, std::span<const double> grads,
                 double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ValidationError("optimizer: parameter/gradient size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw DivergenceError("non-finite gradient at parameter " +
                            std::to_string(i) + " on step " +
                            std::to_string(step_ + 1));
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const double decay = 1.0 - lr * cfg_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    params[i] *= decay;
    params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.eps);
  }
}

namespace {

double SampleLoss(const PmWeights& w, const TrainSample& s,
                  PmActivations* acts, L1Result* out) {
  const PmFactors f = PmForward(w, s.input, acts);
  *out = L1Loss(f, s.speed, s.targets);
  return out->loss;
}

}  // namespace

namespace {

// Samples are reduced in fixed blocks, then blocks in index order, so the
// parallel and serial paths produce identical bits at any thread count.
constexpr std::size_t kGradBlock = 16;

// Adds the gradients of samples[indices[lo, hi)] into `acc` in order.
double AccumulateBlock(const PmWeights& w, const std::vector<TrainSample>& samples,
                       std::span<const std::size_t> indices, std::size_t lo,
                       std::size_t hi, std::span<double> acc,
                       std::vector<double>& g, PmActivations& acts, L1Result& l1) {
  double loss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const TrainSample& s = samples[indices[i]];
    loss += SampleLoss(w, s, &acts, &l1);
    std::fill(g.begin(), g.end(), 0.0);
    PmBackwardInto(w, s.input, acts, l1.grad_factors, g);
    for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
  }
  return loss;
}

void Finish(BatchGrad& r, const std::vector<double>& block_loss,
            const std::vector<double>& blocks, std::size_t n) {
  const std::size_t p = r.grad.size();
  for (std::size_t b = 0; b < block_loss.size(); ++b) {
    r.loss += block_loss[b];
    const double* g = blocks.data() + b * p;
    for (std::size_t j = 0; j < p; ++j) r.grad[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  r.loss *= inv;
  for (double& g : r.grad) g *= inv;
}

}  // namespace

BatchGrad BatchGradient(const PmWeights& w,
                        const std::vector<TrainSample>& samples,
                        std::span<const std::size_t> indices) {
  const std::size_t n = indices.size();
  const std::size_t p = w.params().size();
  BatchGrad r;
  r.grad.assign(p, 0.0);
  if (n == 0) return r;
  const std::size_t nb = (n + kGradBlock - 1) / kGradBlock;
  std::vector<double> blocks(nb * p, 0.0);
  std::vector<double> block_loss(nb, 0.0);
#pragma omp parallel
  {
    PmActivations acts;
    L1Result l1;
    std::vector<double> g(p);
#pragma omp for schedule(static)
    for (long long b = 0; b < static_cast<long long>(nb); ++b) {
      const auto ub = static_cast<std::size_t>(b);
      block_loss[ub] = AccumulateBlock(
          w, samples, indices, ub * kGradBlock, std::min(n, (ub + 1) * kGradBlock),
          std::span<double>(blocks.data() + ub * p, p), g, acts, l1);
    }
  }
  Finish(r, block_loss, blocks, n);
  return r;
}

BatchGrad BatchGradientSerial(const PmWeights& w,
                              const std::vector<TrainSample>& samples,
                              std::span<const std::size_t> indices) {
  const std::size_t n = indices.size();
  const std::size_t p = w.params().size();
  BatchGrad r;
  r.grad.assign(p, 0.0);
  if (n == 0) return r;
  const std::size_t nb = (n + kGradBlock - 1) / kGradBlock;
  std::vector<double> blocks(nb * p, 0.0);
  std::vector<double> block_loss(nb, 0.0);
  PmActivations acts;
  L1Result l1;
  std::vector<double> g(p);
  for (std::size_t b = 0; b < nb; ++b) {
    block_loss[b] = AccumulateBlock(w, samples, indices, b * kGradBlock,
                                    std::min(n, (b + 1) * kGradBlock),
                                    std::span<double>(blocks.data() + b * p, p),
                                    g, acts, l1);
  }
  Finish(r, block_loss, blocks, n);
  return r;
}

double EvaluateL1(const PmWeights& w, const std::vector<TrainSample>& samples) {
  if (samples.empty()) throw ValidationError("evaluation set is empty");
  std::vector<double> losses(samples.size());
#pragma omp parallel
  {
    PmActivations acts;
    L1Result l1;
#pragma omp for schedule(static)
    for (long long i = 0; i < static_cast<long long>(samples.size()); ++i) {
      losses[static_cast<std::size_t>(i)] =
          SampleLoss(w, samples[static_cast<std::size_t>(i)], &acts, &l1);
    }
  }
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(samples.size());
}

double ZeroMotionL1(const std::vector<TrainSample>& samples) {
  if (samples.empty()) throw ValidationError("evaluation set is empty");
  double sum = 0.0;
  for (const auto& s : samples) {
    double l = 0.0;
    for (const auto& t : s.targets) {
      for (double c : t.v) l += std::abs(c);
    }
    sum += l / (4.0 * static_cast<double>(s.targets.size()));
  }
  return sum / static_cast<double>(samples.size());
}

TrainResult TrainPm(const std::vector<TrainSample>& train,
                    const std::vector<TrainSample>& val,
                    const OptimizerConfig& opt, const PmConfig& net) {
  opt.Validate();
  net.Validate();
  if (train.empty() || val.empty()) {
    throw ValidationError("training needs non-empty train and validation sets");
  }
  for (const auto* set : {&train, &val}) {
    for (const auto& s : *set) {
      if (s.input.k != net.k ||
          s.targets.size() != static_cast<std::size_t>(net.horizon)) {
        throw ValidationError("sample shape does not match the network");
      }
    }
  }

  PmWeights w = PmWeights::Init(net, opt.seed);
  TrainResult result{w, {}, 0, EvaluateL1(w, val)};
  if (!std::isfinite(result.best_val_l1)) {
    throw DivergenceError("initial validation loss is not finite");
  }
  AdamW adam(w.params().size(), opt);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(SplitSeed(opt.seed, static_cast<std::uint64_t>(epoch) + 1));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = opt.LearningRate(epoch);
    double train_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += opt.batch_size) {
      const std::size_t e = std::min(order.size(), b + opt.batch_size);
      std::span<const std::size_t> batch(order.data() + b, e - b);
      BatchGrad g = BatchGradient(w, train, batch);
      train_sum += g.loss * static_cast<double>(batch.size());
      adam.Step(w.params(), g.grad, lr);
    }
    EpochRecord rec{epoch + 1,
                    train_sum / static_cast<double>(train.size()),
                    EvaluateL1(w, val)};
    if (!std::isfinite(rec.val_l1) || !std::isfinite(rec.train_l1)) {
      throw DivergenceError("loss became non-finite at epoch " +
                            std::to_string(rec.epoch));
    }
    result.history.push_back(rec);
    if (rec.val_l1 < result.best_val_l1) {
      result.best_val_l1 = rec.val_l1;
      result.best_epoch = rec.epoch;
      result.weights = w;
    }
  }
  return result;
}

void WriteLossCsv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << std::setprecision(17) << "epoch,train_l1,val_l1\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_l1 << ',' << r.val_l1 << '\n';
  }
}

}  // namespace latrack
