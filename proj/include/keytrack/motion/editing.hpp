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

#ifndef KEYTRACK_MOTION_EDITING_HPP_
#define KEYTRACK_MOTION_EDITING_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/motion/generator.hpp"
#include "keytrack/motion/keyframes.hpp"
#include "keytrack/motion/reference_motion.hpp"
#include "keytrack/motion/task.hpp"

namespace keytrack::motion {

struct EditRange {
  double lo = 0.1;
  double hi = 0.8;
  bool Contains(double v) const { return v >= lo && v <= hi; }
};

struct EditSpec {
  TaskId task = TaskId::kFarJump;
  double psi = 0.4;  // task variable, m
  double base_value = 0.4;  // value realized by the base motion, m

  double delta() const { return psi - base_value; }

  void Validate(const EditRange& range) const {
    Require(std::isfinite(psi) && range.Contains(psi), ErrorCode::kOutOfRange,
            TaskName(task) + " task variable " + std::to_string(psi) + " outside [" + std::to_string(range.lo) +
                ", " + std::to_string(range.hi) + "]");
  }
};

// Index 0 is x, 1 is z: far jumps edit the horizontal distance, high jumps
// the apex height.
inline int EditAxis(TaskId task) { return task == TaskId::kFarJump ? 0 : 1; }

struct EditedKeyframe {
  std::size_t key = 0;  // index into the plan
  int frame_index = 0;
  double phase = 0.0;
  Frame frame;  // global pose after the edit
};

// Applies the one-dimensional root translation to the keyframes in the edit
// subset. Joint angles are copied, never recomputed.
inline std::vector<EditedKeyframe> EditKeyframes(const ReferenceMotion& motion, const KeyframePlan& plan,
                                                 const EditSpec& spec, const EditRange& range) {
  spec.Validate(range);
  Require(!plan.edit_phases().empty(), ErrorCode::kInvalidArgument, "keyframe plan has no edit phases");
  const int axis = EditAxis(spec.task);
  std::vector<EditedKeyframe> out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!plan.edited[i]) continue;
    EditedKeyframe e{i, plan.frame_index[i], plan.key_phases[i], motion.frame(plan.frame_index[i])};
    e.frame.root_pos[axis] += spec.delta();
    out.push_back(std::move(e));
  }
  return out;
}

// Anchor frames of the linear offset ramp used by the rule-based baseline.
// Each anchor carries the fraction of the full offset it receives.
inline std::vector<std::pair<int, double>> RuleAnchors(const KeyframePlan& plan, TaskId task) {
  auto frame_of = [&plan](const std::string& label) {
    const auto i = plan.IndexOfLabel(label);
    Require(i.has_value(), ErrorCode::kSchema, "keyframe plan lacks the '" + label + "' keyframe");
    return plan.frame_index[*i];
  };
  if (task == TaskId::kFarJump) return {{frame_of("takeoff"), 0.0}, {frame_of("landing"), 1.0}};
  return {{frame_of("takeoff"), 0.0}, {frame_of("apex"), 1.0}, {frame_of("landing"), 0.0}};
}

// Offset fraction at a frame: zero before the first anchor, linear between
// anchors (exact at anchors), and held after the last anchor.
inline double RuleOffsetFraction(const std::vector<std::pair<int, double>>& anchors, int frame) {
  if (frame <= anchors.front().first) return anchors.front().second;
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
    const auto [fa, va] = anchors[i];
    const auto [fb, vb] = anchors[i + 1];
    if (frame == fb) return vb;
    if (frame < fb) return va + (vb - va) * static_cast<double>(frame - fa) / static_cast<double>(fb - fa);
  }
  return anchors.back().second;
}

// Dense per-frame edit of the global root, as in classical motion
// retargeting: the offset ramps in over flight and the velocities are
// re-derived from the shifted positions.
inline ReferenceMotion RuleEditDense(const ReferenceMotion& motion, const KeyframePlan& plan, const EditSpec& spec,
                                     const EditRange& range) {
  spec.Validate(range);
  const auto anchors = RuleAnchors(plan, spec.task);
  const int axis = EditAxis(spec.task);
  std::vector<Frame> frames = motion.frames();
  for (int k = 0; k < motion.frame_count(); ++k) {
    const double frac = RuleOffsetFraction(anchors, k);
    if (frac != 0.0) frames[k].root_pos[axis] += frac * spec.delta();
  }
  return ReferenceMotion(motion.morphology_id(), motion.frame_rate_hz(), std::move(frames));
}

enum class DatasetMode { kKeyframeEdit, kRuleEditDense };

inline std::string DatasetModeName(DatasetMode m) {
  return m == DatasetMode::kKeyframeEdit ? "keyframe_edit" : "rule_edit_dense";
}

inline DatasetMode ParseDatasetMode(const std::string& s) {
  if (s == "keyframe_edit") return DatasetMode::kKeyframeEdit;
  if (s == "rule_edit_dense") return DatasetMode::kRuleEditDense;
  Fail(ErrorCode::kConfig, "unknown dataset mode '" + s + "' (expected keyframe_edit or rule_edit_dense)");
}

// Global tracking targets for one value of the task variable.
struct EditedMotion {
  EditSpec spec;
  std::vector<Frame> keyframes;  // one global pose per plan keyframe
  std::vector<double> key_offsets;  // applied root offset per plan keyframe
  ReferenceMotion dense;  // rule mode only; empty otherwise

  bool has_dense() const { return dense.frame_count() > 0; }
};

// The family of edited motions indexed by the task variable. Local joint
// trajectories always come from the base motion.
class EditedDataset {
 public:
  EditedDataset(ReferenceMotion base, KeyframePlan plan, TaskId task, double base_value, EditRange range,
                DatasetMode mode)
      : base_(std::move(base)), plan_(std::move(plan)), task_(task), base_value_(base_value), range_(range),
        mode_(mode) {
    plan_.Validate();
    Require(range_.lo <= range_.hi, ErrorCode::kConfig, "edit range is empty");
    Require(range_.Contains(base_value_), ErrorCode::kConfig, "base value lies outside the edit range");
    Require(plan_.frame_index.empty() || plan_.frame_index.back() < base_.frame_count(), ErrorCode::kSchema,
            "keyframe plan refers to frames beyond the motion");
  }

  const ReferenceMotion& base() const { return base_; }
  const KeyframePlan& plan() const { return plan_; }
  TaskId task() const { return task_; }
  double base_value() const { return base_value_; }
  const EditRange& range() const { return range_; }
  DatasetMode mode() const { return mode_; }

  EditSpec Spec(double psi) const { return {task_, psi, base_value_}; }

  EditedMotion Edit(double psi) const {
    const EditSpec spec = Spec(psi);
    spec.Validate(range_);
    EditedMotion out;
    out.spec = spec;
    const int axis = EditAxis(task_);
    out.key_offsets.assign(plan_.size(), 0.0);
    if (mode_ == DatasetMode::kKeyframeEdit) {
      for (std::size_t i = 0; i < plan_.size(); ++i) out.keyframes.push_back(base_.frame(plan_.frame_index[i]));
      for (EditedKeyframe& e : EditKeyframes(base_, plan_, spec, range_)) {
        out.key_offsets[e.key] = e.frame.root_pos[axis] - out.keyframes[e.key].root_pos[axis];
        out.keyframes[e.key] = std::move(e.frame);
      }
    } else {
      out.dense = RuleEditDense(base_, plan_, spec, range_);
      for (std::size_t i = 0; i < plan_.size(); ++i) {
        out.keyframes.push_back(out.dense.frame(plan_.frame_index[i]));
        out.key_offsets[i] = out.keyframes[i].root_pos[axis] - base_.frame(plan_.frame_index[i]).root_pos[axis];
      }
    }
    return out;
  }

  // Root offset at an arbitrary phase: the dense edit in rule mode, and a
  // linear blend between neighbouring keyframe offsets otherwise. Used only
  // for the coarse tracking-failure check, never for rewards.
  Vec2 OffsetAt(const EditedMotion& e, double phi) const {
    Vec2 off = Vec2::Zero();
    const int axis = EditAxis(task_);
    if (e.has_dense()) {
      off = e.dense.Sample(phi).root_pos - base_.Sample(phi).root_pos;
      return off;
    }
    const auto& ph = plan_.key_phases;
    if (ph.empty()) return off;
    if (phi <= ph.front()) {
      off[axis] = e.key_offsets.front() * (ph.front() > 0.0 ? phi / ph.front() : 1.0);
      return off;
    }
    for (std::size_t i = 0; i + 1 < ph.size(); ++i) {
      if (phi <= ph[i + 1]) {
        const double a = (phi - ph[i]) / (ph[i + 1] - ph[i]);
        off[axis] = e.key_offsets[i] + a * (e.key_offsets[i + 1] - e.key_offsets[i]);
        return off;
      }
    }
    off[axis] = e.key_offsets.back();
    return off;
  }

 private:
  ReferenceMotion base_;
  KeyframePlan plan_;
  TaskId task_;
  double base_value_;
  EditRange range_;
  DatasetMode mode_;
};

// Convenience: generator + keyframe selection + dataset in one call.
struct DatasetOptions {
  JumpParams params;
  KeyframeOptions keyframes;
  EditRange range;
  DatasetMode mode = DatasetMode::kKeyframeEdit;
};

inline double TaskBaseValue(const JumpParams& p) {
  return p.task == TaskId::kFarJump ? p.distance : p.apex_height;
}

inline EditedDataset BuildDataset(const sim::Morphology& morph, const DatasetOptions& opt) {
  GeneratedMotion gen = GenerateReference(morph, opt.params);
  const auto semantic = TaskSemanticKeys(opt.params.task, gen.events, gen.motion.duration_s());
  KeyframePlan plan = SelectKeyframes(gen.motion, opt.params.task, semantic, opt.keyframes);
  return EditedDataset(std::move(gen.motion), std::move(plan), opt.params.task, TaskBaseValue(opt.params),
                       opt.range, opt.mode);
}

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_EDITING_HPP_
