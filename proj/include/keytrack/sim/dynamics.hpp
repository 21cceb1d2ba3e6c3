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

#ifndef KEYTRACK_SIM_DYNAMICS_HPP_
#define KEYTRACK_SIM_DYNAMICS_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/model.hpp"

namespace keytrack::sim {

// Planar spatial algebra. Motion vectors are (omega, vx, vz), force vectors
// (n, fx, fz), both expressed in a body frame at the body origin.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace spatial {

// Motion transform from a parent frame to a child frame that is rotated by
// `angle` and whose origin is at `p` in parent coordinates. The force
// transform child -> parent is its transpose.
inline Mat3 MotionTransform(double angle, const Vec2& p) {
  const Mat2 rt = Rotation(angle).transpose();
  Mat3 x = Mat3::Zero();
  x(0, 0) = 1.0;
  x.block<2, 1>(1, 0) = rt * Perp(p);
  x.block<2, 2>(1, 1) = rt;
  return x;
}

// v x m
inline Vec3 CrossMotion(const Vec3& v, const Vec3& m) {
  const Vec2 lin = v[0] * Perp(Vec2(m[1], m[2])) - m[0] * Perp(Vec2(v[1], v[2]));
  return Vec3(0.0, lin.x(), lin.y());
}

// v x* f
inline Vec3 CrossForce(const Vec3& v, const Vec3& f) {
  const Vec2 vl(v[1], v[2]), fl(f[1], f[2]);
  const Vec2 lin = v[0] * Perp(fl);
  return Vec3(Cross2(vl, fl), lin.x(), lin.y());
}

// Rigid-body inertia about the frame origin for mass m, CoM c and
// rotational inertia ic about the CoM.
inline Mat3 Inertia(double m, const Vec2& c, double ic) {
  Mat3 i;
  i << ic + m * c.squaredNorm(), -m * c.y(), m * c.x(),
      -m * c.y(), m, 0.0,
      m * c.x(), 0.0, m;
  return i;
}

inline Vec3 Axis(DofType t) {
  switch (t) {
    case DofType::kSlideX: return Vec3(0, 1, 0);
    case DofType::kSlideZ: return Vec3(0, 0, 1);
    case DofType::kHinge: return Vec3(1, 0, 0);
  }
  return Vec3::Zero();
}

}  // namespace spatial

// Per-body transforms and world placement for one configuration.
struct Placement {
  std::vector<Mat3> xup;  // parent -> body motion transform
  std::vector<Vec2> pos;  // world origin of each body
  std::vector<double> ang;  // world angle of each body
};

inline Placement Place(const Model& model, const VecX& q) {
  Placement pl;
  pl.xup.resize(model.nv);
  pl.pos.resize(model.nv);
  pl.ang.resize(model.nv);
  for (int i = 0; i < model.nv; ++i) {
    Vec2 trans = model.offset[i];
    double rot = 0.0;
    switch (model.type[i]) {
      case DofType::kSlideX: trans.x() += q[i]; break;
      case DofType::kSlideZ: trans.y() += q[i]; break;
      case DofType::kHinge: rot = q[i]; break;
    }
    pl.xup[i] = spatial::MotionTransform(rot, trans);
    const int p = model.parent[i];
    const Vec2 ppos = p < 0 ? Vec2::Zero() : pl.pos[p];
    const double pang = p < 0 ? 0.0 : pl.ang[p];
    pl.pos[i] = ppos + Rotation(pang) * trans;
    pl.ang[i] = pang + rot;
  }
  return pl;
}

// Recursive Newton-Euler inverse dynamics: tau = H(q) qdd + C(q, qd).
// Gravity enters as a fictitious upward base acceleration.
inline VecX InverseDynamics(const Model& model, const Placement& pl, const VecX& qd, const VecX& qdd,
                            bool with_gravity = true) {
  const int n = model.nv;
  std::vector<Vec3> v(n), a(n), f(n);
  const Vec3 a_world(0.0, 0.0, with_gravity ? model.gravity : 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec3 s = spatial::Axis(model.type[i]);
    const int p = model.parent[i];
    const Vec3 vp = p < 0 ? Vec3::Zero() : v[p];
    const Vec3 ap = p < 0 ? a_world : a[p];
    v[i] = pl.xup[i] * vp + s * qd[i];
    a[i] = pl.xup[i] * ap + s * qdd[i] + spatial::CrossMotion(v[i], s * qd[i]);
    const Mat3 inertia = spatial::Inertia(model.mass[i], model.com[i], model.inertia[i]);
    f[i] = inertia * a[i] + spatial::CrossForce(v[i], inertia * v[i]);
  }
  VecX tau(n);
  for (int i = n - 1; i >= 0; --i) {
    tau[i] = spatial::Axis(model.type[i]).dot(f[i]) + model.armature[i] * qdd[i];
    const int p = model.parent[i];
    if (p >= 0) f[p] += pl.xup[i].transpose() * f[i];
  }
  return tau;
}

// Composite-rigid-body joint-space inertia matrix (armature on the diagonal).
inline MatX MassMatrix(const Model& model, const Placement& pl) {
  const int n = model.nv;
  std::vector<Mat3> ic(n);
  for (int i = 0; i < n; ++i) ic[i] = spatial::Inertia(model.mass[i], model.com[i], model.inertia[i]);
  for (int i = n - 1; i >= 0; --i) {
    const int p = model.parent[i];
    if (p >= 0) ic[p] += pl.xup[i].transpose() * ic[i] * pl.xup[i];
  }
  MatX h = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec3 force = ic[i] * spatial::Axis(model.type[i]);
    h(i, i) = spatial::Axis(model.type[i]).dot(force) + model.armature[i];
    int j = i;
    while (model.parent[j] >= 0) {
      force = pl.xup[j].transpose() * force;
      j = model.parent[j];
      h(i, j) = h(j, i) = spatial::Axis(model.type[j]).dot(force);
    }
  }
  return h;
}

// Translational Jacobian (2 x nv) of a point rigidly attached to `body`.
inline Eigen::Matrix<double, 2, Eigen::Dynamic> PointJacobian(const Model& model, const Placement& pl,
                                                             int body, const Vec2& world_point) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> jac = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, model.nv);
  for (int k = body; k >= 0; k = model.parent[k]) {
    switch (model.type[k]) {
      case DofType::kSlideX: jac.col(k) = Vec2(1, 0); break;
      case DofType::kSlideZ: jac.col(k) = Vec2(0, 1); break;
      case DofType::kHinge: jac.col(k) = Perp(world_point - pl.pos[k]); break;
    }
  }
  return jac;
}

inline Vec2 BodyPoint(const Placement& pl, int body, const Vec2& local) {
  return pl.pos[body] + Rotation(pl.ang[body]) * local;
}

inline Vec2 CenterOfMass(const Model& model, const VecX& q) {
  const Placement pl = Place(model, q);
  Vec2 c = Vec2::Zero();
  double m = 0.0;
  for (int i = 0; i < model.nv; ++i) {
    if (model.mass[i] == 0.0) continue;
    c += model.mass[i] * BodyPoint(pl, i, model.com[i]);
    m += model.mass[i];
  }
  return c / m;
}

inline double KineticEnergy(const Model& model, const VecX& q, const VecX& qd) {
  return 0.5 * qd.dot(MassMatrix(model, Place(model, q)) * qd);
}

inline double PotentialEnergy(const Model& model, const VecX& q) {
  const Placement pl = Place(model, q);
  double e = 0.0;
  for (int i = 0; i < model.nv; ++i) e += model.mass[i] * model.gravity * BodyPoint(pl, i, model.com[i]).y();
  return e;
}

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_DYNAMICS_HPP_
