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

#ifndef KEYTRACK_SIM_STEP_HPP_
#define KEYTRACK_SIM_STEP_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/dynamics.hpp"
#include "keytrack/sim/model.hpp"

namespace keytrack::sim {

struct StepInfo {
  VecX torque;  // applied joint torque averaged over the substeps
  VecX peak_torque;  // max |applied torque| over the substeps
  double max_normal_force = 0.0;
  double max_friction_ratio = 0.0;  // |f_t| / (mu f_n) over loaded contacts
  double max_penetration = 0.0;
};

inline VecX ClipTargets(const Model& model, const VecX& targets) {
  Require(targets.size() == model.num_joints(), ErrorCode::kDimensionMismatch,
          "PD command has wrong joint count");
  return targets.cwiseMax(model.lower).cwiseMin(model.upper);
}

// tau = clip(strength * (kp (target - theta) - kd theta_dot), +-limit)
inline VecX PdTorque(const Model& model, const VecX& clipped_targets, const VecX& q, const VecX& qd) {
  const int nj = model.num_joints();
  VecX tau(nj);
  for (int j = 0; j < nj; ++j) {
    const double raw = model.motor_strength *
                       (model.kp[j] * (clipped_targets[j] - q[3 + j]) - model.kd[j] * qd[3 + j]);
    tau[j] = std::clamp(raw, -model.torque_limit[j], model.torque_limit[j]);
  }
  return tau;
}

struct ContactForce {
  double normal = 0.0;
  double tangential = 0.0;
};

// Penalty ground contact at z = 0 with a Coulomb-clamped stiction spring.
// Updates the contact/anchor bookkeeping in `state`.
inline ContactForce GroundContact(const Model& model, SimState& state, int k, const Vec2& p, const Vec2& v) {
  ContactForce cf;
  const ContactParams& c = model.contact;
  if (!c.enabled || p.y() >= 0.0) {
    state.contact[k] = 0;
    state.anchored[k] = 0;
    return cf;
  }
  state.contact[k] = 1;
  const double depth = -p.y();
  const double damping = v.y() < 0.0 ? c.damping : c.damping * (1.0 - model.restitution);
  cf.normal = std::max(0.0, c.stiffness * depth - damping * v.y());
  if (!state.anchored[k]) {
    state.anchored[k] = 1;
    state.anchor_x[k] = p.x();
  }
  double ft = -c.tangential_stiffness * (p.x() - state.anchor_x[k]) - c.tangential_damping * v.x();
  const double bound = model.friction * cf.normal;
  if (std::abs(ft) > bound) {
    ft = std::copysign(bound, ft);
    // Slide the anchor so the spring alone would produce the bounded force.
    state.anchor_x[k] = p.x() + ft / c.tangential_stiffness;
  }
  cf.tangential = ft;
  return cf;
}

// Advances one control period. Each substep is a drift-kick-drift
// composition of semi-implicit Euler (positions half step, velocities full
// step with forces at the midpoint, positions half step).
inline SimState Step(const Model& model, const SimState& in, const PdCommand& command, int substeps,
                     double dt, StepInfo* info = nullptr) {
  Require(in.q.size() == model.nv && in.qd.size() == model.nv, ErrorCode::kDimensionMismatch,
          "state dimension does not match model");
  SimState s = in;
  const int nj = model.num_joints();
  const VecX targets = ClipTargets(model, command.targets);
  VecX torque_sum = VecX::Zero(nj);
  VecX peak = VecX::Zero(nj);
  double max_fn = 0.0, max_ratio = 0.0, max_pen = 0.0;
  const int first_free = model.fixed_base ? 3 : 0;
  const int nfree = model.nv - first_free;
  for (int sub = 0; sub < substeps; ++sub) {
    VecX qmid = s.q + 0.5 * dt * s.qd;
    const Placement pl = Place(model, qmid);
    VecX gen_force = VecX::Zero(model.nv);
    const VecX tau = PdTorque(model, targets, qmid, s.qd);
    gen_force.tail(nj) = tau;
    torque_sum += tau;
    peak = peak.cwiseMax(tau.cwiseAbs());
    for (int k = 0; k < static_cast<int>(model.foot_body.size()); ++k) {
      const int body = model.foot_body[k];
      const Vec2 p = BodyPoint(pl, body, model.foot_offset[k]);
      const auto jac = PointJacobian(model, pl, body, p);
      const Vec2 v = jac * s.qd;
      const ContactForce cf = GroundContact(model, s, k, p, v);
      if (cf.normal > 0.0 || cf.tangential != 0.0) {
        gen_force += jac.transpose() * Vec2(cf.tangential, cf.normal);
        max_fn = std::max(max_fn, cf.normal);
        if (cf.normal > 0.0)
          max_ratio = std::max(max_ratio, std::abs(cf.tangential) / (model.friction * cf.normal));
      }
      max_pen = std::max(max_pen, -p.y());
    }
    const VecX bias = InverseDynamics(model, pl, s.qd, VecX::Zero(model.nv));
    const MatX h = MassMatrix(model, pl);
    VecX qdd = VecX::Zero(model.nv);
    const VecX rhs = (gen_force - bias).tail(nfree);
    qdd.tail(nfree) = h.bottomRightCorner(nfree, nfree).llt().solve(rhs);
    VecX qd_next = s.qd + dt * qdd;
    if (model.fixed_base) qd_next.head(3).setZero();
    qmid += 0.5 * dt * qd_next;
    if (!qmid.allFinite() || !qd_next.allFinite())
      throw SimulationDiverged(sub, "t=" + std::to_string(s.time));
    s.q = qmid;
    s.qd = qd_next;
    s.time += dt;
  }
  if (info != nullptr) {
    info->torque = torque_sum / static_cast<double>(substeps);
    info->peak_torque = peak;
    info->max_normal_force = max_fn;
    info->max_friction_ratio = max_ratio;
    info->max_penetration = max_pen;
  }
  return s;
}

// Re-derives contact flags from the current configuration (no forces).
inline void RefreshContacts(const Model& model, SimState& s) {
  const Placement pl = Place(model, s.q);
  for (int k = 0; k < static_cast<int>(model.foot_body.size()); ++k) {
    const Vec2 p = BodyPoint(pl, model.foot_body[k], model.foot_offset[k]);
    s.contact[k] = p.y() <= 0.0 ? 1 : 0;
    s.anchored[k] = 0;
    s.anchor_x[k] = p.x();
  }
}

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_STEP_HPP_
