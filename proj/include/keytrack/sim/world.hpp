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

#ifndef KEYTRACK_SIM_WORLD_HPP_
#define KEYTRACK_SIM_WORLD_HPP_

#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "keytrack/sim/model.hpp"
#include "keytrack/sim/step.hpp"

namespace keytrack::sim {

struct ResetResult {
  SimState state;
  double lifted_by = 0.0;  // > 0 when the frame was projected out of the ground
};

// Reference state initialization: positions and velocities copied from a
// motion frame, lifted so that no foot point starts below the ground.
inline ResetResult ResetFromFrame(const Model& model, const VecX& q, const VecX& qd, const RandomizationDraw& draw,
                                  double ground_tolerance = 1e-6) {
  Require(q.size() == model.nv && qd.size() == model.nv, ErrorCode::kMorphologyMismatch,
          "reset frame does not match the model's degrees of freedom");
  ResetResult r;
  r.state = SimState::Zero(model);
  r.state.q = q;
  r.state.qd = qd;
  r.state.draw = draw;
  if (model.fixed_base) {
    r.state.qd.head(3).setZero();
  } else {
    const double lowest = LowestFootHeight(ForwardKinematics(model.morphology, q));
    if (lowest < -ground_tolerance) {
      r.state.q[1] -= lowest;
      r.lifted_by = -lowest;
    }
  }
  RefreshContacts(model, r.state);
  return r;
}

enum class Termination { kAlive, kFell, kTrackingFailure, kComplete };

inline const char* TerminationName(Termination t) {
  switch (t) {
    case Termination::kAlive: return "alive";
    case Termination::kFell: return "fell";
    case Termination::kTrackingFailure: return "tracking_failure";
    case Termination::kComplete: return "complete";
  }
  return "unknown";
}

struct TerminationConfig {
  double min_root_z = 0.35;  // m
  double max_abs_pitch = 1.0;  // rad
  double tracking_threshold = 0.5;  // m, mean body CoM distance
};

// Falling has priority over tracking failure, which has priority over
// completion. In relaxed mode the tracking check only runs at keyframes.
inline Termination CheckTermination(const Model& model, const SimState& state, const VecX& ref_q,
                                    const TerminationConfig& cfg, bool relaxed, bool at_keyframe,
                                    bool phase_complete) {
  if (!model.fixed_base && (state.root_z() < cfg.min_root_z || std::abs(state.pitch()) > cfg.max_abs_pitch))
    return Termination::kFell;
  if (!relaxed || at_keyframe) {
    const BodyPoses sim = ForwardKinematics(model.morphology, state.q);
    const BodyPoses ref = ForwardKinematics(model.morphology, ref_q);
    if (MeanBodyDistance(sim.com, ref.com) > cfg.tracking_threshold) return Termination::kTrackingFailure;
  }
  return phase_complete ? Termination::kComplete : Termination::kAlive;
}

// One JSON object per control tick for replay and plotting.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::string& path) : out_(path) {
    Require(static_cast<bool>(out_), ErrorCode::kIo, "cannot write trajectory file '" + path + "'");
  }

  void Write(int tick, double phi, const SimState& s, const VecX& torque) {
    nlohmann::json j;
    j["tick"] = tick;
    j["time"] = s.time;
    j["phi"] = phi;
    j["q"] = std::vector<double>(s.q.data(), s.q.data() + s.q.size());
    j["qd"] = std::vector<double>(s.qd.data(), s.qd.data() + s.qd.size());
    j["contact"] = s.contact;
    j["torque"] = std::vector<double>(torque.data(), torque.data() + torque.size());
    out_ << j.dump() << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_WORLD_HPP_
