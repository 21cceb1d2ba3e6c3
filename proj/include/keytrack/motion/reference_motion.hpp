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

#ifndef KEYTRACK_MOTION_REFERENCE_MOTION_HPP_
#define KEYTRACK_MOTION_REFERENCE_MOTION_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/morphology.hpp"

namespace keytrack::motion {

struct Frame {
  Vec2 root_pos = Vec2::Zero();  // m, (x, z)
  double root_pitch = 0.0;  // rad
  VecX joint_angles;  // rad, local pose
  Vec2 root_vel = Vec2::Zero();
  double root_pitch_rate = 0.0;
  VecX joint_velocities;

  int num_joints() const { return static_cast<int>(joint_angles.size()); }

  VecX q() const {
    VecX out(3 + joint_angles.size());
    out << root_pos.x(), root_pos.y(), root_pitch, joint_angles;
    return out;
  }
  VecX qd() const {
    VecX out(3 + joint_velocities.size());
    out << root_vel.x(), root_vel.y(), root_pitch_rate, joint_velocities;
    return out;
  }

  bool operator==(const Frame& o) const {
    return root_pos == o.root_pos && root_pitch == o.root_pitch && joint_angles == o.joint_angles &&
           root_vel == o.root_vel && root_pitch_rate == o.root_pitch_rate &&
           joint_velocities == o.joint_velocities;
  }
};

// Central differences in the interior, one-sided at the ends; angles use the
// shortest arc.
inline void DeriveVelocities(std::vector<Frame>& frames, double rate) {
  const int n = static_cast<int>(frames.size());
  if (n == 0) return;
  const int nj = frames[0].num_joints();
  for (int k = 0; k < n; ++k) {
    const int a = k == 0 ? 0 : k - 1;
    const int b = k == n - 1 ? n - 1 : k + 1;
    Frame& f = frames[k];
    f.joint_velocities = VecX::Zero(nj);
    if (a == b) {
      f.root_vel.setZero();
      f.root_pitch_rate = 0.0;
      continue;
    }
    const double scale = rate / static_cast<double>(b - a);
    f.root_vel = (frames[b].root_pos - frames[a].root_pos) * scale;
    f.root_pitch_rate = AngleDiff(frames[a].root_pitch, frames[b].root_pitch) * scale;
    for (int j = 0; j < nj; ++j)
      f.joint_velocities[j] = AngleDiff(frames[a].joint_angles[j], frames[b].joint_angles[j]) * scale;
  }
}

struct PhaseStep {
  double phi = 0.0;
  bool complete = false;
};

// phi_next = min(phi + dphi, 1).
inline PhaseStep AdvancePhase(double phi, double dphi) {
  Require(std::isfinite(phi) && phi >= 0.0 && phi <= 1.0, ErrorCode::kOutOfRange,
          "phase must lie in [0, 1]");
  Require(std::isfinite(dphi) && dphi > 0.0 && dphi > -phi, ErrorCode::kInvalidArgument,
          "phase interval must be positive");
  const double next = phi + dphi;
  return {std::min(next, 1.0), next >= 1.0};
}

// Phase-parameterized trajectory on a uniform time grid.
class ReferenceMotion {
 public:
  ReferenceMotion() = default;

  ReferenceMotion(std::string morphology_id, double frame_rate_hz, std::vector<Frame> frames)
      : morphology_id_(std::move(morphology_id)), frame_rate_hz_(frame_rate_hz), frames_(std::move(frames)) {
    Require(frame_rate_hz_ > 0.0 && std::isfinite(frame_rate_hz_), ErrorCode::kInvalidArgument,
            "frame rate must be positive");
    Require(frames_.size() >= 2, ErrorCode::kInvalidArgument, "a motion needs at least two frames");
    const int nj = frames_[0].num_joints();
    for (const Frame& f : frames_)
      Require(f.num_joints() == nj, ErrorCode::kDimensionMismatch, "frames differ in joint count");
    DeriveVelocities(frames_, frame_rate_hz_);
  }

  const std::string& morphology_id() const { return morphology_id_; }
  double frame_rate_hz() const { return frame_rate_hz_; }
  int frame_count() const { return static_cast<int>(frames_.size()); }
  int num_joints() const { return frames_.front().num_joints(); }
  double duration_s() const { return (frame_count() - 1) / frame_rate_hz_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& frame(int k) const { return frames_.at(k); }

  double PhaseOfFrame(int k) const { return static_cast<double>(k) / (frame_count() - 1); }

  // Nearest frame index for a phase, or -1 when phi is not on the grid.
  int FrameAtPhase(double phi, double tol = 1e-9) const {
    const double u = phi * (frame_count() - 1);
    const double r = std::round(u);
    return std::abs(u - r) <= tol * (frame_count() - 1) ? static_cast<int>(r) : -1;
  }

  // Per-tick phase interval for a given control period.
  double PhaseInterval(double control_dt) const { return control_dt / duration_s(); }

  Frame Sample(double phi) const {
    Require(std::isfinite(phi) && phi >= 0.0 && phi <= 1.0, ErrorCode::kOutOfRange,
            "sample phase " + std::to_string(phi) + " outside [0, 1]");
    const int node = FrameAtPhase(phi);
    if (node >= 0) return frames_[node];
    const double u = phi * (frame_count() - 1);
    const int k = std::min(static_cast<int>(std::floor(u)), frame_count() - 2);
    const double a = u - k;
    const Frame& f0 = frames_[k];
    const Frame& f1 = frames_[k + 1];
    Frame out;
    out.root_pos = f0.root_pos + a * (f1.root_pos - f0.root_pos);
    out.root_pitch = f0.root_pitch + a * AngleDiff(f0.root_pitch, f1.root_pitch);
    out.joint_angles.resize(f0.num_joints());
    for (int j = 0; j < f0.num_joints(); ++j)
      out.joint_angles[j] = f0.joint_angles[j] + a * AngleDiff(f0.joint_angles[j], f1.joint_angles[j]);
    out.root_vel = f0.root_vel + a * (f1.root_vel - f0.root_vel);
    out.root_pitch_rate = f0.root_pitch_rate + a * (f1.root_pitch_rate - f0.root_pitch_rate);
    out.joint_velocities = f0.joint_velocities + a * (f1.joint_velocities - f0.joint_velocities);
    return out;
  }

  void ValidateAgainst(const sim::Morphology& m) const {
    Require(morphology_id_ == m.id, ErrorCode::kMorphologyMismatch,
            "motion targets morphology '" + morphology_id_ + "' but model is '" + m.id + "'");
    Require(num_joints() == m.num_joints(), ErrorCode::kMorphologyMismatch,
            "motion has " + std::to_string(num_joints()) + " joints, morphology '" + m.id + "' has " +
                std::to_string(m.num_joints()));
    for (int k = 0; k < frame_count(); ++k)
      for (int j = 0; j < num_joints(); ++j) {
        const double v = frames_[k].joint_angles[j];
        Require(v >= m.joints[j].lower - 1e-9 && v <= m.joints[j].upper + 1e-9, ErrorCode::kOutOfRange,
                "frame " + std::to_string(k) + " joint '" + m.joints[j].name + "' outside its limits");
      }
  }

  bool operator==(const ReferenceMotion& o) const {
    return morphology_id_ == o.morphology_id_ && frame_rate_hz_ == o.frame_rate_hz_ && frames_ == o.frames_;
  }

 private:
  std::string morphology_id_;
  double frame_rate_hz_ = 50.0;
  std::vector<Frame> frames_;
};

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_REFERENCE_MOTION_HPP_
