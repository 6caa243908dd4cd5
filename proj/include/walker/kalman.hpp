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

// Constant-velocity Kalman filter over (cx, cy, w, h) with noise scaled by
// the box size, in the SORT / BYTE tradition.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "walker/error.hpp"
#include "walker/geometry.hpp"

namespace walker {

using KalmanVector = Eigen::Matrix<double, 8, 1>;
using KalmanMatrix = Eigen::Matrix<double, 8, 8>;

struct KalmanParams {
  double position_weight = 1.0 / 20.0;
  double velocity_weight = 1.0 / 160.0;
  double measurement_weight = 1.0 / 20.0;
};

struct KalmanState {
  KalmanVector mean = KalmanVector::Zero();  // cx, cy, w, h, vcx, vcy, vw, vh
  KalmanMatrix covariance = KalmanMatrix::Identity();

  Box box() const { return Box::from_center(mean(0), mean(1), mean(2), mean(3)); }
};

namespace detail {

inline constexpr double kMinExtent = 1e-3;

inline void keep_extent_positive(KalmanState& s) {
  s.mean(2) = std::max(s.mean(2), kMinExtent);
  s.mean(3) = std::max(s.mean(3), kMinExtent);
}

inline void symmetrize(KalmanMatrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace detail

inline KalmanState kalman_initiate(const Box& measurement, const KalmanParams& p = {}) {
  require_valid(measurement);
  KalmanState s;
  s.mean << measurement.cx(), measurement.cy(), measurement.w, measurement.h, 0, 0, 0, 0;
  // Every noise term scales with the box height.
  const double h = measurement.h;
  KalmanVector std;
  std.head<4>().setConstant(2 * p.position_weight * h);
  std.tail<4>().setConstant(10 * p.velocity_weight * h);
  s.covariance = std.cwiseAbs2().asDiagonal();
  return s;
}

inline KalmanState kalman_predict(const KalmanState& state, const KalmanParams& p = {}) {
  KalmanMatrix f = KalmanMatrix::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  const double h = state.mean(3);
  KalmanVector std;
  std.head<4>().setConstant(p.position_weight * h);
  std.tail<4>().setConstant(p.velocity_weight * h);
  KalmanState out;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose();
  out.covariance.diagonal() += std.cwiseAbs2();
  detail::symmetrize(out.covariance);
  detail::keep_extent_positive(out);
  return out;
}

inline KalmanState kalman_update(const KalmanState& state, const Box& measurement,
                                 const KalmanParams& p = {}) {
  if (!measurement.valid()) throw InvalidArgument("kalman_update: non-finite or empty measurement");
  Eigen::Matrix<double, 4, 8> hm = Eigen::Matrix<double, 4, 8>::Zero();
  for (int i = 0; i < 4; ++i) hm(i, i) = 1.0;
  const Eigen::Vector4d r = Eigen::Vector4d::Constant(p.measurement_weight * state.mean(3));
  Eigen::Matrix4d s = hm * state.covariance * hm.transpose();
  s.diagonal() += r.cwiseAbs2();
  const Eigen::Matrix<double, 8, 4> pht = state.covariance * hm.transpose();
  // K = P H^T S^-1, via a Cholesky solve on the symmetric S.
  const Eigen::Matrix<double, 8, 4> gain = s.llt().solve(pht.transpose()).transpose();
  Eigen::Vector4d z;
  z << measurement.cx(), measurement.cy(), measurement.w, measurement.h;
  KalmanState out;
  out.mean = state.mean + gain * (z - hm * state.mean);
  out.covariance = state.covariance - gain * s * gain.transpose();
  detail::symmetrize(out.covariance);
  detail::keep_extent_positive(out);
  return out;
}

}  // namespace walker
