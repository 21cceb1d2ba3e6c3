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

#ifndef KEYTRACK_REWARDS_REWARDS_HPP_
#define KEYTRACK_REWARDS_REWARDS_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/motion/keyframes.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "keytrack/sim/model.hpp"

namespace keytrack::rewards {

struct SparseWeights {
  double body_pos = 10.0;
  double body_rot = 5.0;
  double feet_pos = 10.0;
  double termination = -200.0;
};

// Penalty weights are negative; torque_limits is stored as the magnitude of
// a penalty on the excess over the soft limit.
struct DenseWeights {
  double local_body_pos = 0.75;
  double local_body_rot = 0.5;
  double local_dof_pos = 0.75;
  double feet_orientation = -5e-2;
  double dof_acc = -2.5e-7;
  double dof_vel = -5e-4;
  double action_rate = -5e-1;
  double smoothness = -1e-2;
  double torques = -1e-6;
  double torque_limits = 5.0;
  double dof_pos_limits = -10.0;
  double dof_vel_limits = -5.0;
};

struct Bandwidths {
  double body_pos = 0.3;  // m
  double body_rot = 0.5;  // rad
  double feet_pos = 0.2;  // m
  double dof_pos = 0.5;  // rad
};

struct RewardConfig {
  SparseWeights sparse;
  DenseWeights dense;
  Bandwidths sigma;
  double w_sparse = 1.0;
  double w_dense = 0.5;
  double soft_torque_limit = 0.9;  // fraction of the torque limit
  double soft_dof_pos_limit = 0.95;  // fraction of the joint range
  bool global_every_tick = false;  // dense global tracking (rule-edit baselines)
  // Scale every per-tick reward by the phase advanced that tick relative to
  // the base interval, so per-tick returns sum over the clip rather than over
  // ticks and slowing the phase does not earn extra reward.
  bool phase_weighted = true;

  void Validate() const {
    Require(w_sparse >= 0.0 && w_dense >= 0.0, ErrorCode::kConfig, "group weights must be non-negative");
    Require(sigma.body_pos > 0.0 && sigma.body_rot > 0.0 && sigma.feet_pos > 0.0 && sigma.dof_pos > 0.0,
            ErrorCode::kConfig, "kernel bandwidths must be positive");
    Require(sparse.body_pos >= 0.0 && sparse.body_rot >= 0.0 && sparse.feet_pos >= 0.0 &&
                sparse.termination <= 0.0,
            ErrorCode::kConfig, "sparse tracking weights must be >= 0 and the termination penalty <= 0");
    Require(dense.local_body_pos >= 0.0 && dense.local_body_rot >= 0.0 && dense.local_dof_pos >= 0.0,
            ErrorCode::kConfig, "dense tracking weights must be non-negative");
    for (double w : {dense.feet_orientation, dense.dof_acc, dense.dof_vel, dense.action_rate, dense.smoothness,
                     dense.torques, dense.dof_pos_limits, dense.dof_vel_limits})
      Require(w <= 0.0, ErrorCode::kConfig, "dense penalty weights must be <= 0");
    Require(dense.torque_limits >= 0.0, ErrorCode::kConfig, "torque-limit penalty magnitude must be >= 0");
  }
};

using Terms = std::vector<std::pair<std::string, double>>;

struct RewardVector {
  double sparse = 0.0;
  double dense = 0.0;
  Terms terms;  // per-term breakdown for logging

  double Scalarize(double w_sparse, double w_dense) const { return w_sparse * sparse + w_dense * dense; }
};

// weight * exp(-err^2 / sigma^2)
inline double Kernel(double weight, double err_sq, double sigma) {
  return weight * std::exp(-err_sq / (sigma * sigma));
}

inline double MeanSquaredDistance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  Require(a.size() == b.size() && !a.empty(), ErrorCode::kDimensionMismatch, "point sets differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return s / static_cast<double>(a.size());
}

inline double MeanSquaredAngle(const std::vector<double>& a, const std::vector<double>& b) {
  Require(a.size() == b.size() && !a.empty(), ErrorCode::kDimensionMismatch, "angle sets differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = AngleDiff(b[i], a[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

struct SparseTerms {
  bool active = false;
  std::optional<std::size_t> key;
  double body_pos = 0.0, body_rot = 0.0, feet_pos = 0.0;
  double total() const { return body_pos + body_rot + feet_pos; }
};

// World-frame pose match against a reference pose, times a scale.
inline SparseTerms GlobalTrackingTerms(const sim::BodyPoses& sim, const sim::BodyPoses& ref, double scale,
                                       const RewardConfig& cfg) {
  SparseTerms t;
  t.active = true;
  t.body_pos = scale * Kernel(cfg.sparse.body_pos, MeanSquaredDistance(sim.com, ref.com), cfg.sigma.body_pos);
  t.body_rot = scale * Kernel(cfg.sparse.body_rot, MeanSquaredAngle(sim.angle, ref.angle), cfg.sigma.body_rot);
  t.feet_pos =
      scale * Kernel(cfg.sparse.feet_pos, MeanSquaredDistance(sim.foot_points, ref.foot_points), cfg.sigma.feet_pos);
  return t;
}

// Keyframe-gated global reward: zero unless phi_next lies within `tol` of a
// keyframe phase; otherwise the matched keyframe's scaled pose match.
// `key_poses[i]` is the (edited) global pose of plan keyframe i.
inline SparseTerms SparseGlobalReward(const sim::BodyPoses& sim, const std::vector<sim::BodyPoses>& key_poses,
                                      const motion::KeyframePlan& plan, double phi_next, double tol,
                                      const RewardConfig& cfg) {
  Require(key_poses.size() == plan.size(), ErrorCode::kDimensionMismatch, "one pose per keyframe is required");
  const auto key = plan.Match(phi_next, tol);
  if (!key) return {};
  SparseTerms t = GlobalTrackingTerms(sim, key_poses[*key], plan.reward_scale[*key], cfg);
  t.key = key;
  return t;
}

// Everything the dense group looks at for one control tick.
struct DenseInputs {
  const sim::BodyPoses* sim = nullptr;
  const sim::BodyPoses* ref = nullptr;  // base (unedited) pose at phi_next
  VecX joint_pos, joint_vel, prev_joint_vel;
  VecX ref_joint_pos;
  VecX action, prev_action, prev_prev_action;
  VecX torque;  // mean applied torque over the control period
  VecX peak_torque;
  double dt = 0.02;
};

struct DenseTerms {
  double local_body_pos = 0.0, local_body_rot = 0.0, local_dof_pos = 0.0;
  double feet_orientation = 0.0, dof_acc = 0.0, dof_vel = 0.0, action_rate = 0.0, smoothness = 0.0;
  double torques = 0.0, torque_limits = 0.0, dof_pos_limits = 0.0, dof_vel_limits = 0.0;

  double tracking() const { return local_body_pos + local_body_rot + local_dof_pos; }
  double penalties() const {
    return feet_orientation + dof_acc + dof_vel + action_rate + smoothness + torques + torque_limits +
           dof_pos_limits + dof_vel_limits;
  }
  double total() const { return tracking() + penalties(); }
};

inline std::vector<double> RelativeAngles(const sim::BodyPoses& p) {
  std::vector<double> out(p.angle.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = AngleDiff(p.angle[0], p.angle[i]);
  return out;
}

inline DenseTerms DenseLocalReward(const sim::Model& model, const DenseInputs& in, const RewardConfig& cfg) {
  Require(in.sim != nullptr && in.ref != nullptr, ErrorCode::kInvalidArgument, "dense reward needs both poses");
  const int nj = model.num_joints();
  Require(in.joint_pos.size() == nj && in.joint_vel.size() == nj && in.prev_joint_vel.size() == nj &&
              in.ref_joint_pos.size() == nj && in.action.size() == nj && in.prev_action.size() == nj &&
              in.prev_prev_action.size() == nj && in.torque.size() == nj && in.peak_torque.size() == nj,
          ErrorCode::kDimensionMismatch, "dense reward inputs have inconsistent joint counts");
  const DenseWeights& w = cfg.dense;
  DenseTerms t;
  const auto sim_local = sim::ToRootFrame(*in.sim, in.sim->com);
  const auto ref_local = sim::ToRootFrame(*in.ref, in.ref->com);
  t.local_body_pos = Kernel(w.local_body_pos, MeanSquaredDistance(sim_local, ref_local), cfg.sigma.body_pos);
  t.local_body_rot =
      Kernel(w.local_body_rot, MeanSquaredAngle(RelativeAngles(*in.sim), RelativeAngles(*in.ref)), cfg.sigma.body_rot);
  double dof_sq = 0.0;
  for (int j = 0; j < nj; ++j) {
    const double d = AngleDiff(in.ref_joint_pos[j], in.joint_pos[j]);
    dof_sq += d * d;
  }
  t.local_dof_pos = Kernel(w.local_dof_pos, dof_sq / nj, cfg.sigma.dof_pos);

  double feet = 0.0;
  for (int l : model.morphology.foot_links) {
    const double s = std::sin(in.sim->angle[l]);
    feet += s * s;
  }
  t.feet_orientation = w.feet_orientation * feet;
  const VecX acc = (in.joint_vel - in.prev_joint_vel) / in.dt;
  t.dof_acc = w.dof_acc * acc.squaredNorm();
  t.dof_vel = w.dof_vel * in.joint_vel.squaredNorm();
  t.action_rate = w.action_rate * (in.action - in.prev_action).squaredNorm();
  t.smoothness = w.smoothness * (in.action - 2.0 * in.prev_action + in.prev_prev_action).squaredNorm();
  t.torques = w.torques * in.torque.squaredNorm();
  double torque_excess = 0.0, pos_excess = 0.0, vel_excess = 0.0;
  for (int j = 0; j < nj; ++j) {
    torque_excess += std::max(0.0, in.peak_torque[j] - cfg.soft_torque_limit * model.torque_limit[j]);
    const double mid = 0.5 * (model.lower[j] + model.upper[j]);
    const double half = 0.5 * (model.upper[j] - model.lower[j]) * cfg.soft_dof_pos_limit;
    pos_excess += std::max(0.0, (mid - half) - in.joint_pos[j]) + std::max(0.0, in.joint_pos[j] - (mid + half));
    vel_excess += std::max(0.0, std::abs(in.joint_vel[j]) - model.velocity_limit[j]);
  }
  t.torque_limits = -w.torque_limits * torque_excess;
  t.dof_pos_limits = w.dof_pos_limits * pos_excess;
  t.dof_vel_limits = w.dof_vel_limits * vel_excess;
  return t;
}

// Packages both groups; the termination penalty joins the sparse group once,
// on the terminating tick. Scalarization is left to the trainer.
// `tick_weight` scales the per-tick terms: all dense terms, and the global
// terms when they are paid every tick. Keyframe rewards and the termination
// penalty are per event and never scaled.
inline RewardVector MakeRewardVector(const SparseTerms& s, const DenseTerms& d, bool terminated_failure,
                                     const RewardConfig& cfg, double tick_weight = 1.0) {
  RewardVector r;
  const double term = terminated_failure ? cfg.sparse.termination : 0.0;
  const double ws = cfg.global_every_tick ? tick_weight : 1.0;
  const double wd = tick_weight;
  r.sparse = ws * s.total() + term;
  r.dense = wd * d.total();
  r.terms = {{"g_body_pos", ws * s.body_pos},
             {"g_body_rot", ws * s.body_rot},
             {"g_feet_pos", ws * s.feet_pos},
             {"termination", term},
             {"l_body_pos", wd * d.local_body_pos},
             {"l_body_rot", wd * d.local_body_rot},
             {"l_dof_pos", wd * d.local_dof_pos},
             {"feet_orientation", wd * d.feet_orientation},
             {"dof_acc", wd * d.dof_acc},
             {"dof_vel", wd * d.dof_vel},
             {"action_rate", wd * d.action_rate},
             {"smoothness", wd * d.smoothness},
             {"torques", wd * d.torques},
             {"torque_limits", wd * d.torque_limits},
             {"dof_pos_limits", wd * d.dof_pos_limits},
             {"dof_vel_limits", wd * d.dof_vel_limits}};
  return r;
}

}  // namespace keytrack::rewards

#endif  // KEYTRACK_REWARDS_REWARDS_HPP_
