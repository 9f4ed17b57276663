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

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "latrack/motion_codec.h"

namespace latrack {
namespace {

// Textbook constant-velocity Kalman filter on plain arrays: predict with
// x = F x, P = F P F' + Q; correct with K = P H' (H P H' + R)^-1. The 4x4
// inverse is Gauss-Jordan with partial pivoting.
struct TextbookKf {
  using Vec = std::array<double, 8>;
  using Mat = std::array<std::array<double, 8>, 8>;
  Vec x{};
  Mat P{};
  std::array<double, 8> q{};
  std::array<double, 4> r{};

  TextbookKf(const BoundingBox& b, const KalmanNoise& n) {
    x = {b.x + b.w / 2, b.y + b.h / 2, b.w, b.h, 0, 0, 0, 0};
    for (int i = 0; i < 8; ++i) {
      P[i][i] = 10.0;
      q[i] = n.q[i];
    }
    for (int i = 0; i < 4; ++i) r[i] = n.r[i];
  }

  void Predict() {
    Vec nx = x;
    for (int i = 0; i < 4; ++i) nx[i] += x[i + 4];
    x = nx;
    Mat FP{};
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        FP[i][j] = P[i][j] + (i < 4 ? P[i + 4][j] : 0.0);
    Mat out{};
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        out[i][j] = FP[i][j] + (j < 4 ? FP[i][j + 4] : 0.0);
    for (int i = 0; i < 8; ++i) out[i][i] += q[i];
    P = out;
  }

  static std::array<std::array<double, 4>, 4> Inverse(
      std::array<std::array<double, 4>, 4> a) {
    std::array<std::array<double, 4>, 4> inv{};
    for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
    for (int c = 0; c < 4; ++c) {
      int piv = c;
      for (int r = c + 1; r < 4; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      std::swap(a[c], a[piv]);
      std::swap(inv[c], inv[piv]);
      const double d = a[c][c];
      for (int j = 0; j < 4; ++j) {
        a[c][j] /= d;
        inv[c][j] /= d;
      }
      for (int r = 0; r < 4; ++r) {
        if (r == c) continue;
        const double f = a[r][c];
        for (int j = 0; j < 4; ++j) {
          a[r][j] -= f * a[c][j];
          inv[r][j] -= f * inv[c][j];
        }
      }
    }
    return inv;
  }

  void Correct(const BoundingBox& b) {
    const std::array<double, 4> z{b.x + b.w / 2, b.y + b.h / 2, b.w, b.h};
    std::array<std::array<double, 4>, 4> S{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) S[i][j] = P[i][j] + (i == j ? r[i] : 0.0);
    const auto Si = Inverse(S);
    double K[8][4] = {};
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) K[i][j] += P[i][k] * Si[k][j];
    std::array<double, 4> y{};
    for (int i = 0; i < 4; ++i) y[i] = z[i] - x[i];
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 4; ++j) x[i] += K[i][j] * y[j];
    Mat KHP{};
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 4; ++k) KHP[i][j] += K[i][k] * P[k][j];
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) P[i][j] -= KHP[i][j];
  }
};

double MaxAsym(const KfMatrix& P) { return (P - P.transpose()).cwiseAbs().maxCoeff(); }

BoundingBox CvBox(int f, double vx = 2.5, double vy = -1.5) {
  return {100 + vx * f, 80 + vy * f, 40, 30};
}

TEST(KfUpdate, StationaryFixedPoint) {
  KalmanNoise n = KalmanNoise::Defaults();
  n.q.setZero();
  const BoundingBox b{50, 60, 20, 10};
  KalmanState s = KalmanState::Init({40, 70, 25, 12}, n);
  for (int i = 0; i < 20000; ++i) s = KfUpdate(s, b, 1);
  EXPECT_NEAR(s.x[0], b.cx(), 1e-3);
  EXPECT_NEAR(s.x[1], b.cy(), 1e-3);
  EXPECT_NEAR(s.x[2], b.w, 1e-3);
  for (int i = 4; i < 8; ++i) EXPECT_NEAR(s.x[i], 0.0, 1e-3);
}

TEST(KfUpdate, MatchesTextbookFilter) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 1.5);
  KalmanNoise n = KalmanNoise::Defaults();
  n.q << 0.05, 0.02, 0.01, 0.03, 0.004, 0.002, 0.001, 0.003;
  n.r << 2.0, 1.5, 0.7, 0.9;
  KalmanState s = KalmanState::Init(CvBox(0), n);
  TextbookKf ref(CvBox(0), n);
  const std::vector<int> frames{0, 1, 3, 4, 5, 8, 9, 11, 12, 14, 15, 16, 19, 20,
                                21, 23, 24, 26, 27, 28, 30};
  for (std::size_t i = 1; i < frames.size(); ++i) {
    BoundingBox z = CvBox(frames[i]);
    z.x += noise(rng);
    z.y += noise(rng);
    const int gap = frames[i] - frames[i - 1];
    s = KfUpdate(s, z, gap);
    for (int g = 0; g < gap; ++g) ref.Predict();
    ref.Correct(z);
    for (int k = 0; k < 8; ++k) {
      ASSERT_NEAR(s.x[k], ref.x[k], 1e-9) << "step " << i << " comp " << k;
      for (int j = 0; j < 8; ++j) ASSERT_NEAR(s.P(k, j), ref.P[k][j], 1e-9);
    }
  }
}

// The zero-velocity start decays geometrically; after 20 updates under the
// default noise the residual is about 7.4e-4 px per px/frame of speed.
BoundingBox SlowBox(int f) { return CvBox(f, 1.0, 0.5); }

TEST(KfUpdate, NoiselessConstantVelocityConverges) {
  KalmanState s = KalmanState::Init(SlowBox(0));
  TextbookKf ref(SlowBox(0), KalmanNoise::Defaults());
  for (int f = 1; f <= 20; ++f) {
    s = KfUpdate(s, SlowBox(f), 1);
    ref.Predict();
    ref.Correct(SlowBox(f));
  }
  const BoundingBox next = KfPredict(s, 1)[0];
  EXPECT_LT(CenterError(next, SlowBox(21)), 1e-3);
  ref.Predict();
  EXPECT_NEAR(next.cx(), ref.x[0], 1e-9);
  EXPECT_NEAR(next.cy(), ref.x[1], 1e-9);
}

TEST(KfUpdate, GapEqualsRepeatedTimeUpdates) {
  KalmanNoise n = KalmanNoise::Defaults();
  n.q << 0.3, 0.2, 0.1, 0.1, 0.05, 0.04, 0.01, 0.02;
  KalmanState s = KalmanState::Init(CvBox(0), n);
  s = KfUpdate(s, CvBox(1), 1);
  const KalmanState a = KfUpdate(s, CvBox(3), 2);
  KalmanState c = KfTimeUpdate(s, 1);
  c = KfUpdate(c, CvBox(3), 1);
  EXPECT_LT((a.x - c.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.P - c.P).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KfUpdate, CovarianceStaysSymmetric) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 5);
  KalmanState s = KalmanState::Init(CvBox(0));
  for (int f = 1; f < 300; ++f) {
    BoundingBox z = CvBox(f);
    z.x += g(rng);
    z.y += g(rng);
    s = KfUpdate(s, z, 1 + static_cast<int>(rng() % 4));
    ASSERT_LT(MaxAsym(s.P), 1e-9);
  }
}

TEST(KfUpdate, InnovationLimits) {
  KalmanState s = KalmanState::Init(CvBox(0));
  s = KfUpdate(s, CvBox(1), 1);
  const BoundingBox z{130, 50, 44, 33};
  const KalmanState prior = KfTimeUpdate(s, 1);

  KalmanState big = s;
  big.noise.r.setConstant(1e12);
  const KalmanState loose = KfUpdate(big, z, 1);
  EXPECT_LT((loose.x - prior.x).cwiseAbs().maxCoeff(), 1e-6);

  KalmanState tiny = s;
  tiny.noise.r.setConstant(1e-12);
  const KalmanState tight = KfUpdate(tiny, z, 1);
  EXPECT_NEAR(tight.x[0], z.cx(), 1e-6);
  EXPECT_NEAR(tight.x[1], z.cy(), 1e-6);
  EXPECT_NEAR(tight.x[2], z.w, 1e-6);
  EXPECT_NEAR(tight.x[3], z.h, 1e-6);
}

TEST(KfPredict, Examples) {
  const KalmanState s = KalmanState::Init({0, 0, 10, 10});
  for (const auto& b : KfPredict(s, 4)) EXPECT_EQ(b, (BoundingBox{0, 0, 10, 10}));

  KalmanState v = s;
  v.x[4] = 1.0;
  const auto boxes = KfPredict(v, 3);
  for (int n = 0; n < 3; ++n) {
    EXPECT_DOUBLE_EQ(boxes[n].cx(), 6.0 + n);
    EXPECT_DOUBLE_EQ(boxes[n].cy(), 5.0);
  }
}

TEST(KfPredict, HorizonConsistency) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 2);
  KalmanState s = KalmanState::Init(CvBox(0));
  for (int f = 1; f < 15; ++f) {
    BoundingBox z = CvBox(f);
    z.x += g(rng);
    s = KfUpdate(s, z, 1);
  }
  const auto many = KfPredict(s, 6);
  KalmanState step = s;
  for (int n = 0; n < 6; ++n) {
    EXPECT_EQ(KfPredict(step, 1)[0], many[n]);
    step.x = KfTransition(1) * step.x;
  }
}

TEST(KfPredict, ClampsSize) {
  KalmanState s = KalmanState::Init({0, 0, 4, 4});
  s.x[6] = -3.0;
  const auto boxes = KfPredict(s, 3);
  EXPECT_EQ(boxes[2].w, kKfMinSize);
}

TEST(KfPredict, AgreesWithCodecOnConstantVelocity) {
  KalmanState s = KalmanState::Init(SlowBox(0));
  std::vector<BoundingBox> boxes{SlowBox(0)};
  std::vector<FrameIndex> frames{0};
  for (int f = 1; f <= 20; ++f) {
    s = KfUpdate(s, SlowBox(f), 1);
    boxes.push_back(SlowBox(f));
    frames.push_back(f);
  }
  const NormalizedMotion p = AverageSpeed(HistoryFromTrack(boxes, frames, 3));
  const auto kf = KfPredict(s, 3);
  for (int d = 1; d <= 3; ++d) {
    const BoundingBox codec = ApplyMotion(
        boxes.back(), ApplyFactor({{1.0 * d, 1.0 * d, 1.0 * d, 1.0 * d}}, p));
    EXPECT_LT(CenterError(kf[d - 1], codec), 1e-3);
    EXPECT_NEAR(kf[d - 1].w, codec.w, 1e-3);
  }
}

TEST(ZeroMotion, Examples) {
  const BoundingBox b{3, 4, 5, 6};
  const auto copies = ZeroMotionPredict(b, 3);
  ASSERT_EQ(copies.size(), 3u);
  for (const auto& c : copies) EXPECT_EQ(c, b);
  // Constant velocity: center error grows as |v| * delta.
  for (int d = 1; d <= 5; ++d) {
    EXPECT_NEAR(CenterError(ZeroMotionPredict(CvBox(10), d).back(), CvBox(10 + d)),
                std::hypot(2.5, 1.5) * d, 1e-9);
  }
}

TEST(KalmanNoise, JsonRoundTripAndValidation) {
  KalmanNoise n = KalmanNoise::Defaults();
  n.q[3] = 0.123456789012345678;
  n.r[1] = 7.5;
  const KalmanNoise back = KalmanNoise::FromJson(n.ToJson());
  EXPECT_EQ(back.q, n.q);
  EXPECT_EQ(back.r, n.r);
  KalmanNoise bad = n;
  bad.r[0] = 0.0;
  EXPECT_THROW(bad.Validate(), ValidationError);
  EXPECT_THROW(KalmanNoise::FromJson("{\"q\": [1]}"), ValidationError);
}

TEST(KalmanPredictor, UsesFrameGaps) {
  KalmanPredictor p(KalmanNoise::Defaults());
  KalmanState s = KalmanState::Init(CvBox(0));
  p.Observe(0, CvBox(0));
  for (int f : {2, 3, 6, 7}) {
    p.Observe(static_cast<FrameIndex>(f), CvBox(f));
  }
  s = KfUpdate(s, CvBox(2), 2);
  s = KfUpdate(s, CvBox(3), 1);
  s = KfUpdate(s, CvBox(6), 3);
  s = KfUpdate(s, CvBox(7), 1);
  EXPECT_EQ(p.Predict(2), KfPredict(s, 2));
}

}  // namespace
}  // namespace latrack
