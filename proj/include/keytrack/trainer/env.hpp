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

#ifndef KEYTRACK_TRAINER_ENV_HPP_
#define KEYTRACK_TRAINER_ENV_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/log.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/rewards/rewards.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "keytrack/sim/model.hpp"
#include "keytrack/sim/randomization.hpp"
#include "keytrack/sim/step.hpp"
#include "keytrack/sim/world.hpp"

namespace keytrack::train {

enum class ActionBase { kReference, kDefault };

struct EnvConfig {
  sim::SimConfig sim;
  sim::RandomizationConfig randomization;
  sim::TerminationConfig termination;
  rewards::RewardConfig reward;
  double action_scale = 0.25;  // rad per action unit
  double action_clip = 4.0;  // action units
  ActionBase action_base = ActionBase::kReference;
  bool rsi = true;
  motion::EditRange train_range{0.25, 0.6};
  int history = 1;

  void Validate() const {
    randomization.Validate();
    reward.Validate();
    Require(action_scale > 0.0 && action_clip > 0.0, ErrorCode::kConfig, "action scale and clip must be positive");
    Require(train_range.lo <= train_range.hi, ErrorCode::kConfig, "training range is empty");
    Require(history >= 1, ErrorCode::kConfig, "observation history must be >= 1");
    Require(termination.tracking_threshold > 0.0, ErrorCode::kConfig, "tracking threshold must be positive");
  }
};

// Sizes of the observation blocks for J joints.
struct ObservationLayout {
  int num_joints = 6;
  int history = 1;
  // pitch rate, gravity (2), joint pos, joint vel, previous action, phase,
  // task variable, odometry (2)
  int frame_dim() const { return 1 + 2 + 3 * num_joints + 1 + 1 + 2; }
  int actor_dim() const { return frame_dim() * history; }
  // critic extras: base linear velocity (2) and reference joint positions
  int critic_dim() const { return actor_dim() + 2 + num_joints; }
};

struct StepResult {
  rewards::RewardVector reward;
  sim::Termination termination = sim::Termination::kAlive;
  bool done = false;
  bool failure = false;  // fell, tracking failure, or simulation fault
  bool diverged = false;
  double phi = 0.0;  // phase after the step
  double dphi = 0.0;  // phase increment actually applied
  std::optional<std::size_t> key;  // keyframe rewarded on this tick
  double key_error = 0.0;  // mean world-frame body error at that keyframe, m
  double local_error = 0.0;  // mean root-frame body error vs the base motion, m
  VecX joint_acc;  // rad/s^2
  VecX torque;
};

// One tracking episode generator over an edited dataset: owns its
// simulator state, randomization draw, delay line, and random stream.
class TrackingEnv {
 public:
  TrackingEnv(const motion::EditedDataset* dataset, const sim::Morphology* morph, const EnvConfig& cfg,
              std::uint64_t seed)
      : ds_(dataset), morph_(morph), cfg_(cfg), rng_(seed) {
    Require(ds_ != nullptr && morph_ != nullptr, ErrorCode::kInvalidArgument, "environment needs data and a body");
    cfg_.Validate();
    ds_->base().ValidateAgainst(*morph_);
    layout_.num_joints = morph_->num_joints();
    layout_.history = cfg_.history;
    dphi_base_ = ds_->base().PhaseInterval(cfg_.sim.control_dt());
    substeps_ = cfg_.sim.substeps();
    default_pose_ = ds_->base().frame(0).joint_angles;
    origin_ = ds_->base().frame(0).root_pos;
  }

  const ObservationLayout& layout() const { return layout_; }
  int obs_dim() const { return layout_.actor_dim(); }
  int critic_obs_dim() const { return layout_.critic_dim(); }
  int act_dim() const { return layout_.num_joints; }
  double dphi_base() const { return dphi_base_; }
  const EnvConfig& config() const { return cfg_; }
  EnvConfig& mutable_config() { return cfg_; }
  const motion::EditedDataset& dataset() const { return *ds_; }
  const sim::Model& model() const { return model_; }
  const sim::SimState& state() const { return state_; }
  const motion::EditedMotion& edited() const { return edited_; }
  double phi() const { return phi_; }
  double psi() const { return psi_; }
  int tick() const { return tick_; }
  bool relaxed() const { return relaxed_; }
  void set_relaxed(bool r) { relaxed_ = r; }
  const std::vector<std::uint8_t>& fired() const { return fired_; }
  long lifted_resets() const { return lifted_resets_; }
  long diverged_episodes() const { return diverged_; }
  Rng& rng() { return rng_; }

  // Training reset: task variable from the training range, fresh
  // randomization, and a start phase drawn from {0} and the keyframes.
  void Reset() {
    const double psi = Uniform(rng_, cfg_.train_range.lo, cfg_.train_range.hi);
    const sim::RandomizationDraw draw = sim::SampleRandomization(cfg_.randomization, rng_);
    double start = 0.0;
    if (cfg_.rsi) {
      std::vector<double> starts = {0.0};
      for (double p : ds_->plan().key_phases)
        if (p < 1.0 && p > 0.0) starts.push_back(p);
      const int pick = std::uniform_int_distribution<int>(0, static_cast<int>(starts.size()) - 1)(rng_);
      start = starts[pick];
    }
    ResetTo(psi, start, draw);
  }

  void ResetTo(double psi, double start_phi, const sim::RandomizationDraw& draw) {
    psi_ = psi;
    edited_ = ds_->Edit(psi);
    model_ = sim::Model::Build(*morph_, draw, cfg_.sim);
    key_poses_.clear();
    for (const motion::Frame& f : edited_.keyframes) key_poses_.push_back(sim::ForwardKinematics(*morph_, f.q()));
    const motion::KeyframePlan& plan = ds_->plan();
    fired_.assign(plan.size(), 0);
    for (std::size_t i = 0; i < plan.size(); ++i)
      if (plan.key_phases[i] <= start_phi + 1e-12) fired_[i] = 1;
    const motion::Frame start = GlobalFrameAt(start_phi);
    const sim::ResetResult rr = sim::ResetFromFrame(model_, start.q(), start.qd(), draw);
    if (rr.lifted_by > 0.0) {
      ++lifted_resets_;
      Log(LogLevel::kDebug, "reset frame projected out of the ground by " + std::to_string(rr.lifted_by) + " m");
    }
    state_ = rr.state;
    phi_ = start_phi;
    tick_ = 0;
    const int nj = act_dim();
    prev_action_ = VecX::Zero(nj);
    prev_prev_action_ = VecX::Zero(nj);
    prev_joint_vel_ = state_.joint_velocities();
    delay_.clear();
    for (int i = 0; i < draw.delay_ticks; ++i) delay_.push_back(state_.joints());
    history_.clear();
    done_ = false;
  }

  // Global target pose at a phase: the edited keyframe when phi sits on
  // one, the dense edit in rule mode, the base motion otherwise.
  motion::Frame GlobalFrameAt(double phi) const {
    const motion::KeyframePlan& plan = ds_->plan();
    for (std::size_t i = 0; i < plan.size(); ++i)
      if (std::abs(plan.key_phases[i] - phi) <= 1e-12) return edited_.keyframes[i];
    if (edited_.has_dense()) return edited_.dense.Sample(phi);
    return ds_->base().Sample(phi);
  }

  VecX Observation() {
    VecX frame = ObservationFrame();
    if (history_.empty())
      for (int i = 0; i < layout_.history; ++i) history_.push_back(frame);
    else
      history_.front() = frame;
    VecX out(obs_dim());
    for (int h = 0; h < layout_.history; ++h) out.segment(h * layout_.frame_dim(), layout_.frame_dim()) = history_[h];
    return out;
  }

  VecX CriticObservation() {
    VecX out(critic_obs_dim());
    const VecX ref = ds_->base().Sample(phi_).joint_angles;
    out << Observation(), state_.qd[0], state_.qd[1], ref;
    return out;
  }

  // Next phase: advance by dphi but never step over an unrewarded keyframe.
  double NextPhase(double dphi) const {
    Require(std::isfinite(dphi) && dphi > 0.0, ErrorCode::kInvalidArgument, "phase interval must be positive");
    double next = std::min(phi_ + dphi, 1.0);
    const motion::KeyframePlan& plan = ds_->plan();
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (fired_[i]) continue;
      const double kp = plan.key_phases[i];
      if (kp > phi_ + 1e-12 && kp <= next + 1e-9) {
        next = kp;
        break;
      }
    }
    return next;
  }

  StepResult Step(const VecX& action, double dphi) {
    Require(!done_, ErrorCode::kInvalidArgument, "step called on a finished episode; reset first");
    Require(action.size() == act_dim(), ErrorCode::kDimensionMismatch, "action has wrong size");
    Require(action.allFinite(), ErrorCode::kInvalidArgument, "action is not finite");
    const VecX a = action.cwiseMax(-cfg_.action_clip).cwiseMin(cfg_.action_clip);
    const double phi_next = NextPhase(dphi);
    const bool complete = phi_next >= 1.0;
    const motion::Frame ref_local = ds_->base().Sample(phi_next);
    const VecX& posture = cfg_.action_base == ActionBase::kReference ? ref_local.joint_angles : default_pose_;
    delay_.push_back(posture + cfg_.action_scale * a);
    const sim::PdCommand cmd{delay_.front()};
    delay_.pop_front();

    StepResult r;
    r.dphi = phi_next - phi_;
    sim::StepInfo info;
    const VecX qd_before = state_.joint_velocities();
    try {
      state_ = sim::Step(model_, state_, cmd, substeps_, cfg_.sim.physics_dt(), &info);
    } catch (const SimulationDiverged& e) {
      ++diverged_;
      Log(LogLevel::kWarning, std::string("episode aborted: ") + e.what());
      r.diverged = true;
    }
    phi_ = phi_next;
    ++tick_;
    r.phi = phi_;

    rewards::SparseTerms sparse;
    rewards::DenseTerms dense;
    if (!r.diverged) {
      const sim::BodyPoses sim_poses = sim::ForwardKinematics(*morph_, state_.q);
      const sim::BodyPoses ref_poses = sim::ForwardKinematics(*morph_, ref_local.q());
      const motion::KeyframePlan& plan = ds_->plan();
      const auto match = plan.Match(phi_next, 0.5 * dphi_base_);
      if (match && !fired_[*match]) {
        fired_[*match] = 1;
        r.key = match;
        r.key_error = sim::MeanBodyDistance(sim_poses.com, key_poses_[*match].com);
      }
      if (cfg_.reward.global_every_tick) {
        const motion::Frame g = GlobalFrameAt(phi_next);
        sparse = rewards::GlobalTrackingTerms(sim_poses, sim::ForwardKinematics(*morph_, g.q()), 1.0, cfg_.reward);
      } else if (r.key) {
        sparse = rewards::GlobalTrackingTerms(sim_poses, key_poses_[*r.key], plan.reward_scale[*r.key], cfg_.reward);
        sparse.key = r.key;
      }
      rewards::DenseInputs in;
      in.sim = &sim_poses;
      in.ref = &ref_poses;
      in.joint_pos = state_.joints();
      in.joint_vel = state_.joint_velocities();
      in.prev_joint_vel = qd_before;
      in.ref_joint_pos = ref_local.joint_angles;
      in.action = a;
      in.prev_action = prev_action_;
      in.prev_prev_action = prev_prev_action_;
      in.torque = info.torque;
      in.peak_torque = info.peak_torque;
      in.dt = cfg_.sim.control_dt();
      dense = rewards::DenseLocalReward(model_, in, cfg_.reward);
      r.local_error = sim::MeanBodyDistance(sim::ToRootFrame(sim_poses, sim_poses.com),
                                            sim::ToRootFrame(ref_poses, ref_poses.com));
      r.joint_acc = (in.joint_vel - qd_before) / in.dt;
      r.torque = info.torque;

      VecX tracking_ref = ref_local.q();
      tracking_ref.head(2) += ds_->OffsetAt(edited_, phi_next);
      if (r.key) tracking_ref = edited_.keyframes[*r.key].q();
      r.termination = sim::CheckTermination(model_, state_, tracking_ref, cfg_.termination, relaxed_,
                                            r.key.has_value(), complete);
      r.failure = r.termination == sim::Termination::kFell || r.termination == sim::Termination::kTrackingFailure;
    } else {
      r.failure = true;
      r.termination = sim::Termination::kFell;
      r.joint_acc = VecX::Zero(act_dim());
      r.torque = VecX::Zero(act_dim());
    }
    const double tick_weight = cfg_.reward.phase_weighted ? dphi / dphi_base_ : 1.0;
    r.reward = rewards::MakeRewardVector(sparse, dense, r.failure, cfg_.reward, tick_weight);
    r.done = r.failure || r.termination == sim::Termination::kComplete;
    done_ = r.done;
    prev_prev_action_ = prev_action_;
    prev_action_ = a;
    prev_joint_vel_ = state_.joint_velocities();
    if (layout_.history > 1 && !done_) {
      history_.push_front(ObservationFrame());
      history_.pop_back();
    }
    return r;
  }

 private:
  VecX ObservationFrame() const {
    const int nj = act_dim();
    VecX f(layout_.frame_dim());
    const double pitch = state_.pitch();
    f[0] = state_.qd[2];
    f[1] = -std::sin(pitch);  // gravity direction in the root frame
    f[2] = -std::cos(pitch);
    f.segment(3, nj) = state_.joints();
    f.segment(3 + nj, nj) = state_.joint_velocities();
    f.segment(3 + 2 * nj, nj) = prev_action_;
    f[3 + 3 * nj] = phi_;
    f[4 + 3 * nj] = psi_;
    f[5 + 3 * nj] = state_.q[0] - origin_.x();
    f[6 + 3 * nj] = state_.q[1] - origin_.y();
    return f;
  }

  const motion::EditedDataset* ds_;
  const sim::Morphology* morph_;
  EnvConfig cfg_;
  Rng rng_;
  ObservationLayout layout_;
  double dphi_base_ = 0.01;
  int substeps_ = 10;
  VecX default_pose_;
  Vec2 origin_ = Vec2::Zero();

  sim::Model model_;
  sim::SimState state_;
  motion::EditedMotion edited_;
  std::vector<sim::BodyPoses> key_poses_;
  std::vector<std::uint8_t> fired_;
  std::deque<VecX> delay_;
  std::deque<VecX> history_;
  VecX prev_action_, prev_prev_action_, prev_joint_vel_;
  double phi_ = 0.0;
  double psi_ = 0.0;
  int tick_ = 0;
  bool relaxed_ = false;
  bool done_ = true;
  long lifted_resets_ = 0;
  long diverged_ = 0;
};

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_ENV_HPP_
