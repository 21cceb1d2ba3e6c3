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

#ifndef KEYTRACK_MOTION_KEYFRAMES_HPP_
#define KEYTRACK_MOTION_KEYFRAMES_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/motion/generator.hpp"
#include "keytrack/motion/reference_motion.hpp"
#include "keytrack/motion/task.hpp"

namespace keytrack::motion {

struct SemanticKey {
  double phase = 0.0;
  std::string label;
};

struct KeyframePlan {
  std::vector<double> key_phases;  // strictly increasing, on the frame grid
  std::vector<int> frame_index;
  std::vector<std::string> labels;  // empty for non-semantic keyframes
  std::vector<double> reward_scale;
  std::vector<std::uint8_t> edited;  // membership in the edit subset

  std::size_t size() const { return key_phases.size(); }
  bool semantic(std::size_t i) const { return !labels[i].empty(); }

  std::vector<double> edit_phases() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (edited[i]) out.push_back(key_phases[i]);
    return out;
  }

  std::optional<std::size_t> IndexOfLabel(const std::string& label) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (labels[i] == label) return i;
    return std::nullopt;
  }

  // Keyframe whose phase lies within `tol` of phi_next (closest wins).
  std::optional<std::size_t> Match(double phi_next, double tol) const {
    std::optional<std::size_t> best;
    double best_d = tol;
    for (std::size_t i = 0; i < size(); ++i) {
      const double d = std::abs(key_phases[i] - phi_next);
      if (d <= best_d) {
        best = i;
        best_d = d;
      }
    }
    return best;
  }

  void Validate() const {
    const std::size_t n = size();
    Require(frame_index.size() == n && labels.size() == n && reward_scale.size() == n && edited.size() == n,
            ErrorCode::kSchema, "keyframe plan fields differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      Require(key_phases[i] >= 0.0 && key_phases[i] <= 1.0, ErrorCode::kSchema, "keyframe phase outside [0, 1]");
      Require(i == 0 || key_phases[i] > key_phases[i - 1], ErrorCode::kSchema,
              "keyframe phases must be strictly increasing");
      Require(semantic(i) ? reward_scale[i] >= 1.0 : reward_scale[i] == 1.0, ErrorCode::kSchema,
              "reward scale must be >= 1 for semantic keyframes and 1 otherwise");
    }
  }
};

// n phases evenly spaced strictly inside [lo, hi]: lo + (hi - lo) k / (n + 1).
inline std::vector<double> UniformPhases(int n, double lo = 0.0, double hi = 1.0) {
  Require(n >= 0, ErrorCode::kInvalidArgument, "uniform keyframe count must be >= 0");
  std::vector<double> out;
  for (int k = 1; k <= n; ++k) out.push_back(lo + (hi - lo) * k / (n + 1));
  return out;
}

// Semantic keyframes defined by each task.
inline std::vector<SemanticKey> TaskSemanticKeys(TaskId task, const JumpEvents& ev, double duration_s) {
  std::vector<SemanticKey> keys = {{ev.takeoff_s / duration_s, "takeoff"}};
  if (task == TaskId::kHighJump) keys.push_back({ev.apex_s / duration_s, "apex"});
  keys.push_back({ev.landing_s / duration_s, "landing"});
  keys.push_back({1.0, "end"});
  return keys;
}

// Far jump edits every keyframe at or after landing; high jump edits the apex.
inline void AssignEditSubset(TaskId task, KeyframePlan& plan) {
  plan.edited.assign(plan.size(), 0);
  if (task == TaskId::kFarJump) {
    const auto landing = plan.IndexOfLabel("landing");
    Require(landing.has_value(), ErrorCode::kSchema, "far jump plan needs a landing keyframe");
    for (std::size_t i = *landing; i < plan.size(); ++i) plan.edited[i] = 1;
  } else {
    const auto apex = plan.IndexOfLabel("apex");
    Require(apex.has_value(), ErrorCode::kSchema, "high jump plan needs an apex keyframe");
    plan.edited[*apex] = 1;
  }
}

struct KeyframeOptions {
  int n_uniform = 5;
  double uniform_lo = 0.0;
  double uniform_hi = 1.0;
  double semantic_scale = 2.0;
};

// Merges semantic and uniform phases on the frame grid; two phases landing
// on the same frame collapse into one, keeping the semantic label.
inline KeyframePlan SelectKeyframes(const ReferenceMotion& motion, TaskId task,
                                    const std::vector<SemanticKey>& semantic, const KeyframeOptions& opt) {
  Require(opt.semantic_scale >= 1.0, ErrorCode::kConfig, "semantic reward scale must be >= 1");
  struct Candidate {
    int frame;
    std::string label;
  };
  const int last = motion.frame_count() - 1;
  auto snap = [last](double phi) {
    Require(phi >= 0.0 && phi <= 1.0, ErrorCode::kOutOfRange, "keyframe phase outside [0, 1]");
    return static_cast<int>(std::lround(phi * last));
  };
  std::vector<Candidate> cands;
  for (const SemanticKey& k : semantic) cands.push_back({snap(k.phase), k.label});
  for (double phi : UniformPhases(opt.n_uniform, opt.uniform_lo, opt.uniform_hi)) cands.push_back({snap(phi), ""});
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return !a.label.empty() && b.label.empty();
  });
  KeyframePlan plan;
  for (const Candidate& c : cands) {
    if (!plan.frame_index.empty() && plan.frame_index.back() == c.frame) continue;
    plan.frame_index.push_back(c.frame);
    plan.key_phases.push_back(motion.PhaseOfFrame(c.frame));
    plan.labels.push_back(c.label);
    plan.reward_scale.push_back(c.label.empty() ? 1.0 : opt.semantic_scale);
  }
  AssignEditSubset(task, plan);
  plan.Validate();
  return plan;
}

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_KEYFRAMES_HPP_
