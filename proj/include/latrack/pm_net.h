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

#ifndef LATRACK_PM_NET_H_
#define LATRACK_PM_NET_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latrack/core.h"
#include "latrack/motion_codec.h"
#include "latrack/predictor.h"

namespace latrack {

// Motion predictor: per-frame FC encoder, width-3 temporal convolution,
// average pooling over time, shared decoding FC, N horizon heads and a
// shared 4-wide output FC. Outputs are relative motion factors.
struct PmConfig {
  int k = 3;       // past motions
  int horizon = 3; // N
  int c_enc = 64;
  int c_dec = 32;

  static constexpr int kInputWidth = 8;  // [m, m / gap]
  static constexpr int kKernel = 3;

  void Validate() const;
  friend bool operator==(const PmConfig&, const PmConfig&) = default;
};

struct PmTensor {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All parameters live in one flat, row-major buffer so optimizers and
// gradient checks can treat them uniformly.
class PmWeights {
 public:
  explicit PmWeights(const PmConfig& cfg = {});

  // Fan-in uniform initialization, seed-controlled.
  static PmWeights Init(const PmConfig& cfg, std::uint64_t seed);

  const PmConfig& config() const { return cfg_; }
  const std::vector<PmTensor>& tensors() const { return tensors_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::span<double> tensor(const std::string& name);
  std::span<const double> tensor(const std::string& name) const;

  // Layer views. Weights are [out][in] (conv: [out][in][tap]).
  std::span<const double> enc_w() const { return view(0); }
  std::span<const double> enc_b() const { return view(1); }
  std::span<const double> conv_w() const { return view(2); }
  std::span<const double> conv_b() const { return view(3); }
  std::span<const double> dec_w() const { return view(4); }
  std::span<const double> dec_b() const { return view(5); }
  std::span<const double> head_w(int n) const { return view(6 + 2 * n); }
  std::span<const double> head_b(int n) const { return view(7 + 2 * n); }
  std::span<const double> out_w() const { return view(6 + 2 * cfg_.horizon); }
  std::span<const double> out_b() const { return view(7 + 2 * cfg_.horizon); }

  // Checkpoint JSON: format version, config, named row-major tensors.
  std::string ToJson() const;
  static PmWeights FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static PmWeights Load(const std::string& path);

  friend bool operator==(const PmWeights& a, const PmWeights& b) {
    return a.cfg_ == b.cfg_ && a.params_ == b.params_;
  }

 private:
  std::span<const double> view(std::size_t i) const {
    const auto& t = tensors_[i];
    return {params_.data() + t.offset, t.size};
  }

  PmConfig cfg_;
  std::vector<PmTensor> tensors_;
  std::vector<double> params_;
};

inline constexpr int kCheckpointVersion = 1;

// k x 8 rows of [m_i, m_i / gap_i], oldest first. Shorter histories are
// left-padded by repeating the oldest row; an empty history gives zeros.
struct PmInput {
  int k = 3;
  std::vector<double> rows;

  static PmInput FromHistory(const MotionHistory& history, int k);
};

// N x 4 factors, row per horizon step.
using PmFactors = std::vector<NormalizedMotion>;

// Intermediate activations kept for the backward pass.
struct PmActivations {
  std::vector<double> enc;      // k x c_enc (post-ReLU)
  std::vector<double> conv;     // k x c_enc (post-ReLU)
  std::vector<double> pooled;   // c_enc
  std::vector<double> dec;      // c_dec (post-ReLU)
  std::vector<double> heads;    // N x c_dec (post-ReLU)
  PmFactors out;                // N x 4
};

PmFactors PmForward(const PmWeights& w, const PmInput& input,
                    PmActivations* acts = nullptr);

// Gradient of sum_n <grad_out[n], out[n]> w.r.t. every parameter, laid out
// like PmWeights::params().
std::vector<double> PmBackward(const PmWeights& w, const PmInput& input,
                               const PmFactors& grad_out);
// Same, reusing activations from a forward pass and accumulating into
// `grad` (which must be sized to the parameter count).
void PmBackwardInto(const PmWeights& w, const PmInput& input,
                    const PmActivations& acts, const PmFactors& grad_out,
                    std::span<double> grad);

struct L1Result {
  double loss = 0.0;
  PmFactors grad_factors;  // d loss / d factor
  PmFactors grad_motion;   // d loss / d (factor ⊙ speed)
};

// Mean absolute error between factor ⊙ speed and the target motions.
L1Result L1Loss(const PmFactors& factors, const NormalizedMotion& speed,
                const std::vector<NormalizedMotion>& targets);

// Predicted boxes for frames latest+1 ... latest+N.
std::vector<BoundingBox> PmPredict(const PmWeights& w,
                                   const MotionHistory& history,
                                   const BoundingBox& latest_box);

class NeuralPredictor : public Predictor {
 public:
  explicit NeuralPredictor(PmWeights weights);
  std::string name() const override { return "pm"; }
  void Observe(FrameIndex frame, const BoundingBox& raw) override;
  std::vector<BoundingBox> Predict(int horizon) override;

 private:
  PmWeights weights_;
  std::vector<BoundingBox> boxes_;
  std::vector<FrameIndex> frames_;
};

}  // namespace latrack

#endif  // LATRACK_PM_NET_H_
