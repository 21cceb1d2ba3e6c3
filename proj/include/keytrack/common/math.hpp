// Copyright 2026 The keytrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KEYTRACK_COMMON_MATH_HPP_
#define KEYTRACK_COMMON_MATH_HPP_

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace keytrack {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kStandardGravity = 9.81;

// Maps an angle into (-pi, pi].
inline double WrapAngle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

// Signed shortest-arc difference b - a.
inline double AngleDiff(double a, double b) { return WrapAngle(b - a); }

// Counter-clockwise rotation in the sagittal (x, z) plane.
inline Mat2 Rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// omega x r for a scalar out-of-plane angular velocity.
inline Vec2 Perp(const Vec2& r) { return Vec2(-r.y(), r.x()); }

// Scalar planar cross product a_x b_z - a_z b_x.
inline double Cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline bool AllFinite(const VecX& v) { return v.allFinite(); }

// Cubic Hermite segment on s in [0, 1] with end slopes scaled by `span`.
struct Hermite {
  double p0, v0, p1, v1, span;

  double Value(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * span * v0 +
           (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * span * v1;
  }
  double Slope(double s) const {
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * span * v0 +
            (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * span * v1) /
           span;
  }
};

}  // namespace keytrack

#endif  // KEYTRACK_COMMON_MATH_HPP_
