/* Copyright 2026 The Walker MOT Authors. All Rights Reserved.

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

#include <gtest/gtest.h>

#include <random>

#include "walker/kalman.hpp"

namespace walker {
namespace {

// Textbook constant-velocity filter, written out with explicit inverses.
struct TextbookFilter {
  Eigen::VectorXd x;
  Eigen::MatrixXd p;
  KalmanParams params;

  explicit TextbookFilter(const Box& b, const KalmanParams& kp) : params(kp) {
    x = Eigen::VectorXd::Zero(8);
    x << b.x + b.w / 2, b.y + b.h / 2, b.w, b.h, 0, 0, 0, 0;
    p = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 4; ++i) {
      p(i, i) = std::pow(2 * kp.position_weight * b.h, 2);
      p(i + 4, i + 4) = std::pow(10 * kp.velocity_weight * b.h, 2);
    }
  }
  void predict() {
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(8, 8);
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 4; ++i) {
      q(i, i) = std::pow(params.position_weight * x(3), 2);
      q(i + 4, i + 4) = std::pow(params.velocity_weight * x(3), 2);
    }
    x = f * x;
    p = f * p * f.transpose() + q;
  }
  void update(const Box& b) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, 8);
    for (int i = 0; i < 4; ++i) h(i, i) = 1;
    const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(4, 4) * std::pow(params.measurement_weight * x(3), 2);
    const Eigen::MatrixXd s = h * p * h.transpose() + r;
    const Eigen::MatrixXd k = p * h.transpose() * s.inverse();
    Eigen::VectorXd z(4);
    z << b.x + b.w / 2, b.y + b.h / 2, b.w, b.h;
    x = x + k * (z - h * x);
    p = (Eigen::MatrixXd::Identity(8, 8) - k * h) * p;
  }
};

TEST(KalmanPredict, Examples) {
  const KalmanState s = kalman_initiate(Box{10, 20, 30, 40});
  const KalmanState still = kalman_predict(s);
  EXPECT_EQ(still.mean.head<4>(), s.mean.head<4>());
  KalmanState moving = s;
  moving.mean(4) = 1.0;
  const KalmanState next = kalman_predict(moving);
  EXPECT_EQ(next.mean(0), s.mean(0) + 1.0);
  EXPECT_EQ(next.mean(1), s.mean(1));
  EXPECT_GT(next.covariance(0, 0), s.covariance(0, 0));
}

TEST(KalmanUpdate, ZeroInnovationKeepsMean) {
  const KalmanState s = kalman_predict(kalman_initiate(Box{10, 20, 30, 40}));
  const KalmanState u = kalman_update(s, s.box());
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(u.mean(i), s.mean(i), 1e-12);
  EXPECT_LT(u.covariance(0, 0), s.covariance(0, 0));
}

TEST(KalmanUpdate, TinyMeasurementNoiseSnapsToMeasurement) {
  KalmanParams p;
  p.measurement_weight = 1e-9;
  const KalmanState s = kalman_predict(kalman_initiate(Box{10, 20, 30, 40}, p), p);
  const Box z{13, 18, 31, 42};
  const KalmanState u = kalman_update(s, z, p);
  EXPECT_NEAR(u.box().x, z.x, 1e-6);
  EXPECT_NEAR(u.box().y, z.y, 1e-6);
  EXPECT_NEAR(u.mean(2), z.w, 1e-6);
  EXPECT_NEAR(u.mean(3), z.h, 1e-6);
}

TEST(KalmanUpdate, RejectsBadMeasurement) {
  const KalmanState s = kalman_initiate(Box{10, 20, 30, 40});
  EXPECT_THROW(kalman_update(s, Box{std::nan(""), 0, 1, 1}), InvalidArgument);
  EXPECT_THROW(kalman_update(s, Box{0, 0, 0, 1}), InvalidArgument);
  EXPECT_THROW(kalman_initiate(Box{0, 0, -1, 1}), InvalidArgument);
}

// The lag after a cold start is proportional to speed; 1 px/frame here.
TEST(Kalman, TracksConstantVelocity) {
  KalmanState s = kalman_initiate(Box{100, 100, 30, 60});
  for (int t = 1; t < 20; ++t) {
    s = kalman_predict(s);
    const Box truth{100 + 1.0 * t, 100 - 0.5 * t, 30, 60};
    if (t > 10) {
      EXPECT_NEAR(s.mean(0), truth.cx(), 0.1) << "frame " << t;
      EXPECT_NEAR(s.mean(1), truth.cy(), 0.1) << "frame " << t;
    }
    s = kalman_update(s, truth);
  }
}

TEST(Kalman, MatchesTextbookFilter) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    KalmanParams params;
    params.position_weight = 0.02 + 0.1 * u(rng);
    params.velocity_weight = 0.002 + 0.01 * u(rng);
    params.measurement_weight = 0.02 + 0.1 * u(rng);
    Box b{100 * u(rng), 100 * u(rng), 20 + 40 * u(rng), 30 + 60 * u(rng)};
    KalmanState s = kalman_initiate(b, params);
    TextbookFilter ref(b, params);
    const double vx = 3 * g(rng), vy = 3 * g(rng);
    for (int t = 1; t < 30; ++t) {
      s = kalman_predict(s, params);
      ref.predict();
      if (u(rng) < 0.8) {
        b = Box{b.x + vx + g(rng), b.y + vy + g(rng), std::max(5.0, b.w + g(rng)), std::max(5.0, b.h + g(rng))};
        s = kalman_update(s, b, params);
        ref.update(b);
      }
      for (int i = 0; i < 8; ++i) EXPECT_NEAR(s.mean(i), ref.x(i), 1e-9 * std::max(1.0, std::abs(ref.x(i))));
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          EXPECT_NEAR(s.covariance(i, j), ref.p(i, j), 1e-9 * std::max(1.0, std::abs(ref.p(i, j))));
      EXPECT_LE((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<KalmanMatrix>(s.covariance).eigenvalues().minCoeff(), -1e-9);
      EXPECT_GT(s.mean(2), 0.0);
      EXPECT_GT(s.mean(3), 0.0);
    }
  }
}

TEST(Kalman, ExtentStaysPositive) {
  KalmanState s = kalman_initiate(Box{0, 0, 2, 2});
  s.mean(6) = -10.0;
  s.mean(7) = -10.0;
  const KalmanState p = kalman_predict(s);
  EXPECT_GT(p.mean(2), 0.0);
  EXPECT_GT(p.mean(3), 0.0);
}

}  // namespace
}  // namespace walker
