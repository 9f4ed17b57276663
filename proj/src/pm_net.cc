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

#include "latrack/pm_net.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "latrack/util.h"

namespace latrack {

void PmConfig::Validate() const {
  if (k < 1) throw ValidationError("predictor k must be >= 1");
  if (horizon < 1) throw ValidationError("predictor horizon must be >= 1");
  if (c_enc < 1 || c_dec < 1) {
    throw ValidationError("predictor channel widths must be >= 1");
  }
}

PmWeights::PmWeights(const PmConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  const int in = PmConfig::kInputWidth;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    const std::size_t offset = params_.size();
    tensors_.push_back({std::move(name), std::move(shape), offset, size});
    params_.resize(offset + size, 0.0);
  };
  add("enc_fc.weight", {cfg_.c_enc, in});
  add("enc_fc.bias", {cfg_.c_enc});
  add("temporal_conv.weight", {cfg_.c_enc, cfg_.c_enc, PmConfig::kKernel});
  add("temporal_conv.bias", {cfg_.c_enc});
  add("dec_shared_fc.weight", {cfg_.c_dec, cfg_.c_enc});
  add("dec_shared_fc.bias", {cfg_.c_dec});
  for (int n = 0; n < cfg_.horizon; ++n) {
    add("head_fc." + std::to_string(n) + ".weight", {cfg_.c_dec, cfg_.c_dec});
    add("head_fc." + std::to_string(n) + ".bias", {cfg_.c_dec});
  }
  add("out_fc.weight", {4, cfg_.c_dec});
  add("out_fc.bias", {4});
}

PmWeights PmWeights::Init(const PmConfig& cfg, std::uint64_t seed) {
  PmWeights w(cfg);
  Rng rng(SplitSeed(seed, "pm-init"));
  for (const auto& t : w.tensors_) {
    if (t.shape.size() < 2) continue;  // biases start at zero
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < t.shape.size(); ++d) {
      fan_in *= static_cast<std::size_t>(t.shape[d]);
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < t.size; ++i) {
      w.params_[t.offset + i] = dist(rng);
    }
  }
  return w;
}

std::span<double> PmWeights::tensor(const std::string& name) {
  for (const auto& t : tensors_) {
    if (t.name == name) return {params_.data() + t.offset, t.size};
  }
  throw ValidationError("no tensor named " + name);
}

std::span<const double> PmWeights::tensor(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return {params_.data() + t.offset, t.size};
  }
  throw ValidationError("no tensor named " + name);
}

std::string PmWeights::ToJson() const {
  nlohmann::ordered_json j;
  j["format"] = "latrack.pm";
  j["version"] = kCheckpointVersion;
  j["k"] = cfg_.k;
  j["horizon"] = cfg_.horizon;
  j["c_enc"] = cfg_.c_enc;
  j["c_dec"] = cfg_.c_dec;
  auto& layers = j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : tensors_) {
    layers.push_back(
        {{"name", t.name},
         {"shape", t.shape},
         {"data", std::vector<double>(params_.begin() + t.offset,
                                      params_.begin() + t.offset + t.size)}});
  }
  return j.dump();
}

PmWeights PmWeights::FromJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "latrack.pm") {
    throw ValidationError("checkpoint: not a motion predictor checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported version");
  }
  PmConfig cfg;
  cfg.k = j.at("k").get<int>();
  cfg.horizon = j.at("horizon").get<int>();
  cfg.c_enc = j.at("c_enc").get<int>();
  cfg.c_dec = j.at("c_dec").get<int>();
  PmWeights w(cfg);
  const auto& layers = j.at("tensors");
  if (layers.size() != w.tensors_.size()) {
    throw ValidationError("checkpoint: tensor count mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& t = w.tensors_[i];
    if (layers[i].at("name").get<std::string>() != t.name ||
        layers[i].at("shape").get<std::vector<int>>() != t.shape) {
      throw ValidationError("checkpoint: unexpected tensor " +
                            layers[i].at("name").get<std::string>());
    }
    const auto data = layers[i].at("data").get<std::vector<double>>();
    if (data.size() != t.size) {
      throw ValidationError("checkpoint: bad data length for " + t.name);
    }
    std::copy(data.begin(), data.end(), w.params_.begin() + t.offset);
  }
  return w;
}

void PmWeights::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << ToJson() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

PmWeights PmWeights::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return FromJson(text);
}

PmInput PmInput::FromHistory(const MotionHistory& history, int k) {
  history.Validate();
  if (k < 1) throw ValidationError("k must be >= 1");
  PmInput in;
  in.k = k;
  in.rows.assign(static_cast<std::size_t>(k) * PmConfig::kInputWidth, 0.0);
  const int avail = static_cast<int>(history.size());
  if (avail == 0) return in;
  const int first = std::max(0, avail - k);
  const int used = avail - first;
  for (int t = 0; t < k; ++t) {
    // Pad on the left with the oldest available motion.
    const int src = first + std::max(0, t - (k - used));
    const auto& m = history.motions[src];
    const double gap = history.intervals[src];
    double* row = in.rows.data() + t * PmConfig::kInputWidth;
    for (int c = 0; c < 4; ++c) {
      row[c] = m[c];
      row[4 + c] = m[c] / gap;
    }
  }
  return in;
}

namespace {

inline double Relu(double v) { return v > 0.0 ? v : 0.0; }

void CheckInput(const PmConfig& cfg, const PmInput& input) {
  if (input.k != cfg.k ||
      input.rows.size() !=
          static_cast<std::size_t>(cfg.k) * PmConfig::kInputWidth) {
    throw ValidationError("predictor input shape mismatch");
  }
}

}  // namespace

PmFactors PmForward(const PmWeights& w, const PmInput& input,
                    PmActivations* acts) {
  const PmConfig& cfg = w.config();
  CheckInput(cfg, input);
  const int k = cfg.k, ce = cfg.c_enc, cd = cfg.c_dec, nh = cfg.horizon;
  constexpr int in_w = PmConfig::kInputWidth;

  PmActivations local;
  PmActivations& a = acts ? *acts : local;
  a.enc.assign(static_cast<std::size_t>(k) * ce, 0.0);
  a.conv.assign(static_cast<std::size_t>(k) * ce, 0.0);
  a.pooled.assign(ce, 0.0);
  a.dec.assign(cd, 0.0);
  a.heads.assign(static_cast<std::size_t>(nh) * cd, 0.0);
  a.out.assign(nh, NormalizedMotion{});

  const auto enc_w = w.enc_w(), enc_b = w.enc_b();
  for (int t = 0; t < k; ++t) {
    const double* x = input.rows.data() + t * in_w;
    for (int c = 0; c < ce; ++c) {
      double s = enc_b[c];
      const double* wr = enc_w.data() + c * in_w;
      for (int i = 0; i < in_w; ++i) s += wr[i] * x[i];
      a.enc[t * ce + c] = Relu(s);
    }
  }

  const auto conv_w = w.conv_w(), conv_b = w.conv_b();
  constexpr int kk = PmConfig::kKernel;
  for (int t = 0; t < k; ++t) {
    for (int o = 0; o < ce; ++o) {
      double s = conv_b[o];
      for (int tap = 0; tap < kk; ++tap) {
        const int src = t + tap - kk / 2;
        if (src < 0 || src >= k) continue;
        const double* h = a.enc.data() + src * ce;
        for (int c = 0; c < ce; ++c) {
          s += conv_w[(o * ce + c) * kk + tap] * h[c];
        }
      }
      a.conv[t * ce + o] = Relu(s);
    }
  }

  for (int o = 0; o < ce; ++o) {
    double s = 0.0;
    for (int t = 0; t < k; ++t) s += a.conv[t * ce + o];
    a.pooled[o] = s / k;
  }

  const auto dec_w = w.dec_w(), dec_b = w.dec_b();
  for (int p = 0; p < cd; ++p) {
    double s = dec_b[p];
    for (int o = 0; o < ce; ++o) s += dec_w[p * ce + o] * a.pooled[o];
    a.dec[p] = Relu(s);
  }

  const auto out_w = w.out_w(), out_b = w.out_b();
  for (int n = 0; n < nh; ++n) {
    const auto hw = w.head_w(n), hb = w.head_b(n);
    double* e = a.heads.data() + n * cd;
    for (int q = 0; q < cd; ++q) {
      double s = hb[q];
      for (int p = 0; p < cd; ++p) s += hw[q * cd + p] * a.dec[p];
      e[q] = Relu(s);
    }
    for (int r = 0; r < 4; ++r) {
      double s = out_b[r];
      for (int q = 0; q < cd; ++q) s += out_w[r * cd + q] * e[q];
      a.out[n][r] = s;
    }
  }
  return a.out;
}

void PmBackwardInto(const PmWeights& w, const PmInput& input,
                    const PmActivations& a, const PmFactors& grad_out,
                    std::span<double> grad) {
  const PmConfig& cfg = w.config();
  CheckInput(cfg, input);
  if (grad_out.size() != static_cast<std::size_t>(cfg.horizon)) {
    throw ValidationError("output gradient shape mismatch");
  }
  if (grad.size() != w.params().size()) {
    throw ValidationError("gradient buffer size mismatch");
  }
  const int k = cfg.k, ce = cfg.c_enc, cd = cfg.c_dec, nh = cfg.horizon;
  constexpr int in_w = PmConfig::kInputWidth;
  constexpr int kk = PmConfig::kKernel;
  const auto& T = w.tensors();
  auto g = [&](std::size_t i) { return grad.data() + T[i].offset; };

  const auto out_w = w.out_w();
  double* g_out_w = g(6 + 2 * nh);
  double* g_out_b = g(7 + 2 * nh);
  std::vector<double> d_dec(cd, 0.0), d_head(cd);
  for (int n = 0; n < nh; ++n) {
    const double* e = a.heads.data() + n * cd;
    std::fill(d_head.begin(), d_head.end(), 0.0);
    for (int r = 0; r < 4; ++r) {
      const double dy = grad_out[n][r];
      if (dy == 0.0) continue;
      g_out_b[r] += dy;
      for (int q = 0; q < cd; ++q) {
        g_out_w[r * cd + q] += dy * e[q];
        d_head[q] += out_w[r * cd + q] * dy;
      }
    }
    const auto hw = w.head_w(n);
    double* g_hw = g(6 + 2 * n);
    double* g_hb = g(7 + 2 * n);
    for (int q = 0; q < cd; ++q) {
      if (e[q] <= 0.0) continue;
      const double dq = d_head[q];
      g_hb[q] += dq;
      for (int p = 0; p < cd; ++p) {
        g_hw[q * cd + p] += dq * a.dec[p];
        d_dec[p] += hw[q * cd + p] * dq;
      }
    }
  }

  const auto dec_w = w.dec_w();
  double* g_dec_w = g(4);
  double* g_dec_b = g(5);
  std::vector<double> d_pooled(ce, 0.0);
  for (int p = 0; p < cd; ++p) {
    if (a.dec[p] <= 0.0) continue;
    const double dp = d_dec[p];
    g_dec_b[p] += dp;
    for (int o = 0; o < ce; ++o) {
      g_dec_w[p * ce + o] += dp * a.pooled[o];
      d_pooled[o] += dec_w[p * ce + o] * dp;
    }
  }

  const auto conv_w = w.conv_w();
  double* g_conv_w = g(2);
  double* g_conv_b = g(3);
  std::vector<double> d_enc(static_cast<std::size_t>(k) * ce, 0.0);
  for (int t = 0; t < k; ++t) {
    for (int o = 0; o < ce; ++o) {
      if (a.conv[t * ce + o] <= 0.0) continue;
      const double dc = d_pooled[o] / k;
      g_conv_b[o] += dc;
      for (int tap = 0; tap < kk; ++tap) {
        const int src = t + tap - kk / 2;
        if (src < 0 || src >= k) continue;
        const double* h = a.enc.data() + src * ce;
        double* dh = d_enc.data() + src * ce;
        for (int c = 0; c < ce; ++c) {
          const std::size_t wi = (o * ce + c) * kk + tap;
          g_conv_w[wi] += dc * h[c];
          dh[c] += conv_w[wi] * dc;
        }
      }
    }
  }

  double* g_enc_w = g(0);
  double* g_enc_b = g(1);
  for (int t = 0; t < k; ++t) {
    const double* x = input.rows.data() + t * in_w;
    for (int c = 0; c < ce; ++c) {
      if (a.enc[t * ce + c] <= 0.0) continue;
      const double dh = d_enc[t * ce + c];
      g_enc_b[c] += dh;
      for (int i = 0; i < in_w; ++i) g_enc_w[c * in_w + i] += dh * x[i];
    }
  }
}

std::vector<double> PmBackward(const PmWeights& w, const PmInput& input,
                               const PmFactors& grad_out) {
  PmActivations acts;
  PmForward(w, input, &acts);
  std::vector<double> grad(w.params().size(), 0.0);
  PmBackwardInto(w, input, acts, grad_out, grad);
  return grad;
}

L1Result L1Loss(const PmFactors& factors, const NormalizedMotion& speed,
                const std::vector<NormalizedMotion>& targets) {
  if (factors.size() != targets.size() || factors.empty()) {
    throw ValidationError("L1 loss: factor/target shape mismatch");
  }
  const double scale = 1.0 / (4.0 * static_cast<double>(factors.size()));
  L1Result r;
  r.grad_factors.assign(factors.size(), NormalizedMotion{});
  r.grad_motion.assign(factors.size(), NormalizedMotion{});
  for (std::size_t n = 0; n < factors.size(); ++n) {
    for (int c = 0; c < 4; ++c) {
      const double diff = factors[n][c] * speed[c] - targets[n][c];
      r.loss += std::abs(diff);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      r.grad_motion[n][c] = sign * scale;
      r.grad_factors[n][c] = sign * scale * speed[c];
    }
  }
  r.loss *= scale;
  return r;
}

std::vector<BoundingBox> PmPredict(const PmWeights& w,
                                   const MotionHistory& history,
                                   const BoundingBox& latest_box) {
  RequireValid(latest_box, "latest box");
  const int nh = w.config().horizon;
  if (history.size() == 0) {
    return std::vector<BoundingBox>(static_cast<std::size_t>(nh), latest_box);
  }
  const NormalizedMotion speed = AverageSpeed(history);
  const PmFactors factors =
      PmForward(w, PmInput::FromHistory(history, w.config().k));
  std::vector<BoundingBox> out;
  out.reserve(nh);
  for (const auto& f : factors) {
    out.push_back(ApplyMotion(latest_box, ApplyFactor(f, speed)));
  }
  return out;
}

NeuralPredictor::NeuralPredictor(PmWeights weights)
    : weights_(std::move(weights)) {}

void NeuralPredictor::Observe(FrameIndex frame, const BoundingBox& raw) {
  boxes_.push_back(raw);
  frames_.push_back(frame);
  const std::size_t keep = static_cast<std::size_t>(weights_.config().k) + 1;
  if (boxes_.size() > keep) {
    boxes_.erase(boxes_.begin());
    frames_.erase(frames_.begin());
  }
}

std::vector<BoundingBox> NeuralPredictor::Predict(int horizon) {
  if (horizon > weights_.config().horizon) {
    throw ValidationError("requested horizon exceeds the network's heads");
  }
  const MotionHistory history =
      HistoryFromTrack(boxes_, frames_, weights_.config().k);
  auto boxes = PmPredict(weights_, history, boxes_.back());
  boxes.resize(static_cast<std::size_t>(horizon));
  return boxes;
}

}  // namespace latrack
