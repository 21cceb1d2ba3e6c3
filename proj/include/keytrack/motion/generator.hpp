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

#ifndef KEYTRACK_MOTION_GENERATOR_HPP_
#define KEYTRACK_MOTION_GENERATOR_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/motion/reference_motion.hpp"
#include "keytrack/motion/task.hpp"
#include "keytrack/sim/morphology.hpp"

namespace keytrack::motion {

struct JumpParams {
  TaskId task = TaskId::kFarJump;
  double distance = 0.4;  // far jump d0, m
  double apex_height = 0.2;  // high jump h0, m
  double duration_s = 2.0;
  double frame_rate_hz = 50.0;
  double far_flight_time_s = 0.3;
  // Segment durations, s.
  double stand_s = 0.2;
  double crouch_s = 0.4;
  double push_s = 0.2;
  double land_s = 0.2;
  double recover_s = 0.4;
  // Pelvis heights, m.
  double stand_height = 0.52;
  double crouch_height = 0.42;
  double takeoff_height = 0.50;
  double tuck_height = 0.08;
  // Torso pitch key values, rad (negative leans forward).
  double crouch_pitch = -0.35;
  double takeoff_pitch = -0.10;
  double flight_pitch = -0.15;
  double land_pitch = -0.30;
  // Ankle position relative to the pelvis when standing, m (slightly behind
  // so the centre of mass sits over the middle of the foot).
  double stance_ankle_x = -0.01;
};

struct JumpEvents {
  double takeoff_s = 0.0;
  double apex_s = 0.0;
  double landing_s = 0.0;
};

// Closed-form root/foot paths the frames are sampled from.
class JumpProfile {
 public:
  JumpProfile(const JumpParams& p, double sole_depth) : p_(p), sole_(sole_depth) {
    if (p.task == TaskId::kFarJump) {
      Require(p.distance >= 0.1 && p.distance <= 1.0, ErrorCode::kInvalidArgument,
              "far jump distance must lie in [0.1, 1.0] m");
      flight_ = p.far_flight_time_s;
      vz_ = 0.5 * kStandardGravity * flight_;
      distance_ = p.distance;
    } else {
      Require(p.apex_height >= 0.0 && p.apex_height <= 0.6, ErrorCode::kInvalidArgument,
              "high jump apex height must lie in [0, 0.6] m");
      vz_ = std::sqrt(2.0 * kStandardGravity * p.apex_height);
      flight_ = 2.0 * vz_ / kStandardGravity;
      distance_ = 0.0;
    }
    Require(flight_ >= 0.0, ErrorCode::kInvalidArgument, "flight time must be non-negative");
    t_push_ = p.stand_s + p.crouch_s;
    t_takeoff_ = t_push_ + p.push_s;
    t_land_ = t_takeoff_ + flight_;
    t_settle_ = t_land_ + p.land_s;
    t_recovered_ = t_settle_ + p.recover_s;
    Require(t_recovered_ <= p.duration_s + 1e-12, ErrorCode::kInfeasible,
            "duration " + std::to_string(p.duration_s) + " s is shorter than the " +
                std::to_string(t_recovered_) + " s needed for the requested flight");
    vx_ = distance_ / (0.5 * p.push_s + flight_ + 0.5 * p.land_s);
    x_takeoff_ = 0.5 * vx_ * p.push_s;
    x_land_ = x_takeoff_ + vx_ * flight_;
    foot_takeoff_x_ = p.stance_ankle_x;
    foot_land_x_ = distance_ + p.stance_ankle_x;
  }

  JumpEvents events() const { return {t_takeoff_, t_takeoff_ + 0.5 * flight_, t_land_}; }
  double flight_time() const { return flight_; }
  double takeoff_vz() const { return vz_; }
  double takeoff_vx() const { return vx_; }
  double takeoff_height() const { return p_.takeoff_height; }
  double distance() const { return distance_; }

  double RootX(double t) const {
    if (t <= t_push_) return 0.0;
    if (t <= t_takeoff_) return Hermite{0.0, 0.0, x_takeoff_, vx_, p_.push_s}.Value((t - t_push_) / p_.push_s);
    if (t <= t_land_) return x_takeoff_ + vx_ * (t - t_takeoff_);
    if (t <= t_settle_)
      return Hermite{x_land_, vx_, distance_, 0.0, p_.land_s}.Value((t - t_land_) / p_.land_s);
    return distance_;
  }

  double RootZ(double t) const {
    const double t_crouch = p_.stand_s;
    if (t <= t_crouch) return p_.stand_height;
    if (t <= t_push_)
      return Hermite{p_.stand_height, 0.0, p_.crouch_height, 0.0, p_.crouch_s}.Value((t - t_crouch) / p_.crouch_s);
    if (t <= t_takeoff_)
      return Hermite{p_.crouch_height, 0.0, p_.takeoff_height, vz_, p_.push_s}.Value((t - t_push_) / p_.push_s);
    if (t <= t_land_) {
      const double tau = t - t_takeoff_;
      return p_.takeoff_height + vz_ * tau - 0.5 * kStandardGravity * tau * tau;
    }
    if (t <= t_settle_)
      return Hermite{p_.takeoff_height, -vz_, p_.crouch_height, 0.0, p_.land_s}.Value((t - t_land_) / p_.land_s);
    if (t <= t_recovered_)
      return Hermite{p_.crouch_height, 0.0, p_.stand_height, 0.0, p_.recover_s}.Value((t - t_settle_) / p_.recover_s);
    return p_.stand_height;
  }

  double Pitch(double t) const {
    std::vector<std::pair<double, double>> keys = {{0.0, 0.0},
                                                   {p_.stand_s, 0.0},
                                                   {t_push_, p_.crouch_pitch},
                                                   {t_takeoff_, p_.takeoff_pitch}};
    if (flight_ > 0.0) keys.push_back({t_takeoff_ + 0.5 * flight_, p_.flight_pitch});
    keys.push_back({t_settle_, p_.land_pitch});
    keys.push_back({t_recovered_, 0.0});
    if (p_.duration_s > t_recovered_) keys.push_back({p_.duration_s, 0.0});
    if (t <= keys.front().first) return keys.front().second;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      const auto [ta, va] = keys[i];
      const auto [tb, vb] = keys[i + 1];
      if (t <= tb) {
        if (tb - ta <= 0.0) return vb;
        return Hermite{va, 0.0, vb, 0.0, tb - ta}.Value((t - ta) / (tb - ta));
      }
    }
    return keys.back().second;
  }

  // Ankle position in the world frame (both legs share the sagittal path).
  Vec2 Ankle(double t) const {
    if (t <= t_takeoff_ || flight_ <= 0.0) {
      return t <= t_takeoff_ ? Vec2(foot_takeoff_x_, sole_) : Vec2(foot_land_x_, sole_);
    }
    if (t >= t_land_) return Vec2(foot_land_x_, sole_);
    const double s = (t - t_takeoff_) / flight_;
    const Vec2 rel0(foot_takeoff_x_ - x_takeoff_, sole_ - p_.takeoff_height);
    const Vec2 rel1(foot_land_x_ - x_land_, sole_ - p_.takeoff_height);
    Vec2 rel(Hermite{rel0.x(), -vx_, rel1.x(), -vx_, flight_}.Value(s),
             Hermite{rel0.y(), -vz_, rel1.y(), vz_, flight_}.Value(s));
    const double bump = std::sin(kPi * s);
    rel.y() += p_.tuck_height * bump * bump;
    return Vec2(RootX(t), RootZ(t)) + rel;
  }

 private:
  JumpParams p_;
  double sole_;
  double flight_ = 0.0, vz_ = 0.0, vx_ = 0.0, distance_ = 0.0;
  double t_push_ = 0.0, t_takeoff_ = 0.0, t_land_ = 0.0, t_settle_ = 0.0, t_recovered_ = 0.0;
  double x_takeoff_ = 0.0, x_land_ = 0.0, foot_takeoff_x_ = 0.0, foot_land_x_ = 0.0;
};

struct LegGeometry {
  double thigh = 0.25;
  double shank = 0.25;
  double sole = 0.05;  // ankle height above a flat foot's sole

  static LegGeometry FromMorphology(const sim::Morphology& m) {
    Require(m.num_joints() == 6, ErrorCode::kMorphologyMismatch,
            "jump generator expects the 6-joint biped layout");
    LegGeometry g;
    g.thigh = m.joints[1].anchor.norm();
    g.shank = m.joints[2].anchor.norm();
    g.sole = 0.0;
    for (const sim::FootPoint& f : m.foot_points) g.sole = std::max(g.sole, -f.offset.y());
    return g;
  }
};

struct LegAngles {
  double hip = 0.0, knee = 0.0, ankle = 0.0;
};

// Two-link leg IK with the knee bending forward and the foot kept flat.
inline LegAngles SolveLeg(const LegGeometry& g, const Vec2& hip, double pitch, const Vec2& ankle) {
  const Vec2 d = ankle - hip;
  const double reach = std::clamp(d.norm(), std::abs(g.thigh - g.shank) + 1e-6, 0.999 * (g.thigh + g.shank));
  const double toward = std::atan2(d.x(), -d.y());
  const double cos_thigh = (g.thigh * g.thigh + reach * reach - g.shank * g.shank) / (2.0 * g.thigh * reach);
  const double cos_knee = (g.thigh * g.thigh + g.shank * g.shank - reach * reach) / (2.0 * g.thigh * g.shank);
  const double thigh_abs = toward + std::acos(std::clamp(cos_thigh, -1.0, 1.0));
  const double knee = -(kPi - std::acos(std::clamp(cos_knee, -1.0, 1.0)));
  const double shank_abs = thigh_abs + knee;
  return {thigh_abs - pitch, knee, -shank_abs};
}

struct GeneratedMotion {
  ReferenceMotion motion;
  JumpEvents events;
};

inline GeneratedMotion GenerateReference(const sim::Morphology& morph, const JumpParams& params) {
  const JumpProfile profile(params, LegGeometry::FromMorphology(morph).sole);
  const LegGeometry leg = LegGeometry::FromMorphology(morph);
  const double steps = params.duration_s * params.frame_rate_hz;
  const int intervals = static_cast<int>(std::lround(steps));
  Require(intervals >= 1 && std::abs(steps - intervals) < 1e-9, ErrorCode::kInvalidArgument,
          "duration must be a whole number of frame periods");
  std::vector<Frame> frames(intervals + 1);
  for (int k = 0; k <= intervals; ++k) {
    const double t = k / params.frame_rate_hz;
    Frame& f = frames[k];
    f.root_pos = Vec2(profile.RootX(t), profile.RootZ(t));
    f.root_pitch = profile.Pitch(t);
    const LegAngles la = SolveLeg(leg, f.root_pos, f.root_pitch, profile.Ankle(t));
    f.joint_angles.resize(6);
    f.joint_angles << la.hip, la.knee, la.ankle, la.hip, la.knee, la.ankle;
  }
  frames.back().root_pos.x() = profile.distance();
  GeneratedMotion out{ReferenceMotion(morph.id, params.frame_rate_hz, std::move(frames)), profile.events()};
  try {
    out.motion.ValidateAgainst(morph);
  } catch (const Error& e) {
    Fail(ErrorCode::kInfeasible, std::string("generated pose violates limits: ") + e.what());
  }
  return out;
}

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_GENERATOR_HPP_
