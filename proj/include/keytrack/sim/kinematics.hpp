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

#ifndef KEYTRACK_SIM_KINEMATICS_HPP_
#define KEYTRACK_SIM_KINEMATICS_HPP_

#include <algorithm>
#include <limits>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/morphology.hpp"

namespace keytrack::sim {

// World-frame poses of every link plus the contact points.
struct BodyPoses {
  std::vector<Vec2> origin;  // link frame origins
  std::vector<double> angle;  // absolute link angles
  std::vector<Vec2> com;  // link centres of mass ("body positions")
  std::vector<Vec2> foot_points;

  int num_links() const { return static_cast<int>(origin.size()); }
};

// q = [x, z, pitch, joint angles...]; uses the nominal geometry.
inline BodyPoses ForwardKinematics(const Morphology& m, const VecX& q) {
  Require(q.size() == m.dof(), ErrorCode::kDimensionMismatch, "forward kinematics: q has wrong size");
  BodyPoses p;
  const int nl = m.num_links();
  p.origin.resize(nl);
  p.angle.resize(nl);
  p.com.resize(nl);
  p.origin[0] = Vec2(q[0], q[1]);
  p.angle[0] = q[2];
  for (int j = 0; j < m.num_joints(); ++j) {
    const Joint& jt = m.joints[j];
    p.origin[jt.child] = p.origin[jt.parent] + Rotation(p.angle[jt.parent]) * jt.anchor;
    p.angle[jt.child] = p.angle[jt.parent] + q[3 + j];
  }
  for (int l = 0; l < nl; ++l) p.com[l] = p.origin[l] + Rotation(p.angle[l]) * m.links[l].com;
  p.foot_points.reserve(m.foot_points.size());
  for (const FootPoint& f : m.foot_points)
    p.foot_points.push_back(p.origin[f.link] + Rotation(p.angle[f.link]) * f.offset);
  return p;
}

// Positions expressed in the root frame (root origin, root orientation).
inline std::vector<Vec2> ToRootFrame(const BodyPoses& p, const std::vector<Vec2>& points) {
  const Mat2 rt = Rotation(p.angle[0]).transpose();
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& x : points) out.push_back(rt * (x - p.origin[0]));
  return out;
}

inline double LowestFootHeight(const BodyPoses& p) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Vec2& f : p.foot_points) lo = std::min(lo, f.y());
  return lo;
}

// Mean Euclidean distance between corresponding link CoMs.
inline double MeanBodyDistance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  Require(a.size() == b.size() && !a.empty(), ErrorCode::kDimensionMismatch, "body sets differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum / static_cast<double>(a.size());
}

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_KINEMATICS_HPP_
