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

#ifndef KEYTRACK_SIM_MODEL_HPP_
#define KEYTRACK_SIM_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/morphology.hpp"
#include "keytrack/sim/randomization.hpp"

namespace keytrack::sim {

struct ContactParams {
  bool enabled = true;
  double stiffness = 3e4;  // N/m
  double damping = 300.0;  // N s/m
  double tangential_stiffness = 1.5e4;
  double tangential_damping = 150.0;
};

struct SimConfig {
  double control_hz = 50.0;
  double physics_hz = 500.0;
  double gravity = kStandardGravity;
  ContactParams contact;

  double control_dt() const { return 1.0 / control_hz; }
  double physics_dt() const { return 1.0 / physics_hz; }
  int substeps() const {
    const double ratio = physics_hz / control_hz;
    const int n = static_cast<int>(std::lround(ratio));
    Require(n >= 1 && std::abs(ratio - n) < 1e-9, ErrorCode::kConfig,
            "physics rate must be an integer multiple of the control rate");
    return n;
  }
};

enum class DofType { kSlideX, kSlideZ, kHinge };

// Generalized-coordinate model. Bodies 0 and 1 are massless carriers for the
// floating base translation; body 2 is the root link; body 2 + l is link l.
// Body index == dof index == index into q, so q = [x, z, pitch, joints...].
struct Model {
  Morphology morphology;  // nominal geometry and limits
  int nv = 0;
  std::vector<int> parent;
  std::vector<DofType> type;
  std::vector<Vec2> offset;  // joint placement in the parent body frame
  std::vector<double> mass;
  std::vector<double> inertia;
  std::vector<Vec2> com;
  std::vector<double> armature;

  VecX kp, kd, torque_limit, lower, upper, velocity_limit;
  double motor_strength = 1.0;
  double friction = 1.0;
  double restitution = 0.0;
  double gravity = kStandardGravity;
  ContactParams contact;
  bool fixed_base = false;

  std::vector<int> foot_body;
  std::vector<Vec2> foot_offset;

  int num_joints() const { return nv - 3; }
  static int BodyOfLink(int link) { return 2 + link; }

  static Model Build(const Morphology& m, const RandomizationDraw& draw, const SimConfig& cfg) {
    m.Validate();
    Model model;
    model.morphology = m;
    const int nj = m.num_joints();
    model.nv = 3 + nj;
    model.parent = {-1, 0, 1};
    model.type = {DofType::kSlideX, DofType::kSlideZ, DofType::kHinge};
    model.offset = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    model.mass = {0.0, 0.0};
    model.inertia = {0.0, 0.0};
    model.com = {Vec2::Zero(), Vec2::Zero()};
    model.armature = {0.0, 0.0, 0.0};
    for (int l = 0; l < m.num_links(); ++l) {
      const Link& link = m.links[l];
      if (l == 0) {
        model.mass.push_back(link.mass + draw.trunk_mass_delta);
        model.inertia.push_back(link.inertia * model.mass.back() / link.mass);
        model.com.push_back(link.com + Vec2(draw.base_com_offset_x, draw.base_com_offset_z));
      } else {
        model.mass.push_back(link.mass * draw.link_mass_scale);
        model.inertia.push_back(link.inertia * draw.link_mass_scale);
        model.com.push_back(link.com);
      }
      Require(model.mass.back() > 0.0, ErrorCode::kConfig, "randomized link mass must stay positive");
    }
    model.kp.resize(nj);
    model.kd.resize(nj);
    model.torque_limit.resize(nj);
    model.lower.resize(nj);
    model.upper.resize(nj);
    model.velocity_limit.resize(nj);
    for (int j = 0; j < nj; ++j) {
      const Joint& jt = m.joints[j];
      model.parent.push_back(BodyOfLink(jt.parent));
      model.type.push_back(DofType::kHinge);
      model.offset.push_back(jt.anchor);
      model.armature.push_back(jt.armature);
      model.kp[j] = jt.kp * draw.kp_scale;
      model.kd[j] = jt.kd * draw.kd_scale;
      model.torque_limit[j] = jt.torque_limit;
      model.lower[j] = jt.lower;
      model.upper[j] = jt.upper;
      model.velocity_limit[j] = jt.velocity_limit;
    }
    for (const FootPoint& f : m.foot_points) {
      model.foot_body.push_back(BodyOfLink(f.link));
      model.foot_offset.push_back(f.offset);
    }
    model.motor_strength = draw.motor_strength;
    model.friction = draw.friction;
    model.restitution = draw.restitution;
    model.gravity = cfg.gravity;
    model.contact = cfg.contact;
    model.fixed_base = m.fixed_base;
    return model;
  }
};

struct SimState {
  VecX q;
  VecX qd;
  double time = 0.0;
  std::vector<std::uint8_t> contact;  // per foot point
  std::vector<std::uint8_t> anchored;  // tangential stiction spring active
  std::vector<double> anchor_x;
  std::uint64_t rng_seed = 0;
  RandomizationDraw draw;

  static SimState Zero(const Model& model) {
    SimState s;
    s.q = VecX::Zero(model.nv);
    s.qd = VecX::Zero(model.nv);
    s.contact.assign(model.foot_body.size(), 0);
    s.anchored.assign(model.foot_body.size(), 0);
    s.anchor_x.assign(model.foot_body.size(), 0.0);
    return s;
  }

  double root_x() const { return q[0]; }
  double root_z() const { return q[1]; }
  double pitch() const { return q[2]; }
  auto joints() const { return q.tail(q.size() - 3); }
  auto joint_velocities() const { return qd.tail(qd.size() - 3); }
};

struct PdCommand {
  VecX targets;  // joint position targets, rad
};

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_MODEL_HPP_
