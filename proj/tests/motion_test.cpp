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


#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "keytrack/common/random.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/motion/motion_io.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "test_util.hpp"

namespace keytrack::motion {
namespace {

using keytrack::testing::RaisesCode;

DatasetOptions FarJump() { return DatasetOptions{}; }

DatasetOptions HighJump() {
  DatasetOptions o;
  o.params.task = TaskId::kHighJump;
  o.range = {0.0, 0.4};
  return o;
}

TEST(GeneratorTest, FarJumpCoversTheRequestedDistanceWithinJointLimits) {
  const sim::Morphology m = sim::DefaultCharacter();
  for (double d : {0.25, 0.4, 0.6}) {
    JumpParams p;
    p.distance = d;
    const GeneratedMotion g = GenerateReference(m, p);
    EXPECT_EQ(g.motion.frame_count(), 101);
    EXPECT_EQ(g.motion.frames().back().root_pos.x() - g.motion.frame(0).root_pos.x(), d);
    EXPECT_NO_THROW(g.motion.ValidateAgainst(m));
    EXPECT_LT(g.events.takeoff_s, g.events.landing_s);
  }
}

TEST(GeneratorTest, HighJumpApexRisesByTheApexHeight) {
  const sim::Morphology m = sim::DefaultCharacter();
  JumpParams p;
  p.task = TaskId::kHighJump;
  p.apex_height = 0.2;
  const GeneratedMotion g = GenerateReference(m, p);
  // Ballistic flight from the take-off height with v0 = sqrt(2 g h).
  const double t_apex = g.events.apex_s;
  EXPECT_NEAR(t_apex - g.events.takeoff_s, std::sqrt(2 * 0.2 / kStandardGravity), 1e-12);
  const int k = static_cast<int>(std::lround(t_apex * p.frame_rate_hz));
  const double dt = k / p.frame_rate_hz - t_apex;
  EXPECT_NEAR(g.motion.frame(k).root_pos.y(), p.takeoff_height + 0.2 - 0.5 * kStandardGravity * dt * dt, 1e-12);
  for (const Frame& f : g.motion.frames()) EXPECT_EQ(f.root_pos.x(), 0.0);
}

TEST(GeneratorTest, FeetRestOnTheGroundOutsideTheFlight) {
  const sim::Morphology m = sim::DefaultCharacter();
  const GeneratedMotion g = GenerateReference(m, JumpParams{});
  for (int k = 0; k < g.motion.frame_count(); ++k) {
    const double t = k / g.motion.frame_rate_hz();
    const double lowest = sim::LowestFootHeight(sim::ForwardKinematics(m, g.motion.frame(k).q()));
    if (t <= g.events.takeoff_s || t >= g.events.landing_s)
      EXPECT_NEAR(lowest, 0.0, 1e-6) << "frame " << k;
    else
      EXPECT_GT(lowest, 0.0) << "frame " << k;
  }
}

TEST(GeneratorTest, RejectsInfeasibleParameters) {
  const sim::Morphology m = sim::DefaultCharacter();
  JumpParams p;
  p.task = TaskId::kHighJump;
  p.apex_height = 0.6;
  p.duration_s = 1.2;
  EXPECT_TRUE(RaisesCode([&] { GenerateReference(m, p); }, ErrorCode::kInfeasible));
  JumpParams q;
  q.distance = 5.0;
  EXPECT_TRUE(RaisesCode([&] { GenerateReference(m, q); }, ErrorCode::kInvalidArgument));
}

TEST(ReferenceMotionTest, SamplingReturnsGridFramesAndInterpolatesBetween) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  const ReferenceMotion& mo = ds.base();
  for (int k = 0; k < mo.frame_count(); ++k) EXPECT_TRUE(mo.Sample(mo.PhaseOfFrame(k)) == mo.frame(k));
  const double phi = 0.5 * (mo.PhaseOfFrame(40) + mo.PhaseOfFrame(41));
  const Frame mid = mo.Sample(phi);
  EXPECT_NEAR(mid.root_pos.x(), 0.5 * (mo.frame(40).root_pos.x() + mo.frame(41).root_pos.x()), 1e-12);
  EXPECT_NEAR(mid.joint_angles[1], 0.5 * (mo.frame(40).joint_angles[1] + mo.frame(41).joint_angles[1]), 1e-12);
  EXPECT_TRUE(RaisesCode([&] { mo.Sample(1.5); }, ErrorCode::kOutOfRange));
  EXPECT_DOUBLE_EQ(mo.PhaseInterval(0.02), 0.01);
}

TEST(ReferenceMotionTest, PhaseAdvanceCompletesAtOne) {
  PhaseStep s = AdvancePhase(0.95, 0.03);
  EXPECT_DOUBLE_EQ(s.phi, 0.98);
  EXPECT_FALSE(s.complete);
  s = AdvancePhase(0.98, 0.03);
  EXPECT_EQ(s.phi, 1.0);
  EXPECT_TRUE(s.complete);
  EXPECT_TRUE(RaisesCode([] { AdvancePhase(0.5, 0.0); }, ErrorCode::kInvalidArgument));
  EXPECT_TRUE(RaisesCode([] { AdvancePhase(-0.1, 0.01); }, ErrorCode::kOutOfRange));
}

TEST(KeyframeTest, UniformPhasesAreEvenlySpacedInsideTheInterval) {
  const auto u = UniformPhases(5);
  ASSERT_EQ(u.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(u[k], (k + 1) / 6.0);
  EXPECT_TRUE(UniformPhases(0).empty());
}

TEST(KeyframeTest, FarJumpPlanHasSemanticKeysAndEditsFromLandingOn) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  const KeyframePlan& plan = ds.plan();
  const auto takeoff = plan.IndexOfLabel("takeoff");
  const auto landing = plan.IndexOfLabel("landing");
  const auto end = plan.IndexOfLabel("end");
  ASSERT_TRUE(takeoff && landing && end);
  EXPECT_FALSE(plan.IndexOfLabel("apex").has_value());
  EXPECT_EQ(plan.key_phases[*end], 1.0);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i > 0) {
      EXPECT_GT(plan.key_phases[i], plan.key_phases[i - 1]);
    }
    EXPECT_EQ(plan.key_phases[i], ds.base().PhaseOfFrame(plan.frame_index[i]));
    EXPECT_EQ(plan.reward_scale[i], plan.semantic(i) ? 2.0 : 1.0);
    EXPECT_EQ(plan.edited[i] != 0, i >= *landing);
  }
}

TEST(KeyframeTest, HighJumpEditsOnlyTheApex) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), HighJump());
  const auto apex = ds.plan().IndexOfLabel("apex");
  ASSERT_TRUE(apex.has_value());
  for (std::size_t i = 0; i < ds.plan().size(); ++i) EXPECT_EQ(ds.plan().edited[i] != 0, i == *apex);
}

TEST(KeyframeTest, MatchPicksTheClosestKeyWithinTolerance) {
  KeyframePlan plan;
  plan.key_phases = {0.2, 0.5, 0.8};
  plan.frame_index = {20, 50, 80};
  plan.labels = {"", "", ""};
  plan.reward_scale = {1, 1, 1};
  plan.edited = {0, 0, 0};
  EXPECT_EQ(plan.Match(0.504, 0.005), std::optional<std::size_t>(1));
  EXPECT_FALSE(plan.Match(0.51, 0.005).has_value());
  plan.reward_scale[0] = 2.0;
  EXPECT_TRUE(RaisesCode([&] { plan.Validate(); }, ErrorCode::kSchema));
}

// Property: editing moves only the task axis of the edited keyframes' root
// and leaves every local joint angle bitwise unchanged.
TEST(EditTest, KeyframeEditPreservesLocalPoseForRandomTaskValues) {
  for (const DatasetOptions& opt : {FarJump(), HighJump()}) {
    const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), opt);
    const int axis = EditAxis(ds.task());
    Rng rng = MakeRng(11, {static_cast<std::uint64_t>(axis)});
    for (int trial = 0; trial < 200; ++trial) {
      const double psi = Uniform(rng, ds.range().lo, ds.range().hi);
      const EditedMotion e = ds.Edit(psi);
      ASSERT_EQ(e.keyframes.size(), ds.plan().size());
      EXPECT_FALSE(e.has_dense());
      for (std::size_t i = 0; i < ds.plan().size(); ++i) {
        const Frame& base = ds.base().frame(ds.plan().frame_index[i]);
        const Frame& edited = e.keyframes[i];
        ASSERT_TRUE(edited.joint_angles == base.joint_angles);
        ASSERT_EQ(edited.root_pitch, base.root_pitch);
        ASSERT_EQ(edited.root_pos[1 - axis], base.root_pos[1 - axis]);
        const double expected = ds.plan().edited[i] ? psi - ds.base_value() : 0.0;
        ASSERT_NEAR(edited.root_pos[axis] - base.root_pos[axis], expected, 1e-12);
        ASSERT_EQ(e.key_offsets[i], edited.root_pos[axis] - base.root_pos[axis]);
      }
    }
  }
}

TEST(EditTest, BaseValueEditIsTheIdentity) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  const EditedMotion e = ds.Edit(ds.base_value());
  for (std::size_t i = 0; i < ds.plan().size(); ++i)
    EXPECT_TRUE(e.keyframes[i] == ds.base().frame(ds.plan().frame_index[i]));
}

TEST(EditTest, TaskValuesOutsideTheRangeAreRejected) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  std::string msg;
  EXPECT_TRUE(RaisesCode([&] { ds.Edit(0.95); }, ErrorCode::kOutOfRange, &msg));
  EXPECT_NE(msg.find("far_jump"), std::string::npos);
  EXPECT_TRUE(RaisesCode([&] { ds.Edit(0.05); }, ErrorCode::kOutOfRange));
  EXPECT_TRUE(RaisesCode([&] { ds.Edit(std::numeric_limits<double>::quiet_NaN()); }, ErrorCode::kOutOfRange));
  EXPECT_NO_THROW(ds.Edit(0.1));
  EXPECT_NO_THROW(ds.Edit(0.8));
}

TEST(EditTest, RuleEditRampsBetweenAnchors) {
  DatasetOptions opt = FarJump();
  opt.mode = DatasetMode::kRuleEditDense;
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), opt);
  const EditedMotion e = ds.Edit(0.6);
  ASSERT_TRUE(e.has_dense());
  const int takeoff = ds.plan().frame_index[*ds.plan().IndexOfLabel("takeoff")];
  const int landing = ds.plan().frame_index[*ds.plan().IndexOfLabel("landing")];
  const double delta = 0.2;
  for (int k = 0; k < ds.base().frame_count(); ++k) {
    const Frame& b = ds.base().frame(k);
    const Frame& d = e.dense.frame(k);
    double frac = 0.0;
    if (k >= landing) frac = 1.0;
    else if (k > takeoff) frac = static_cast<double>(k - takeoff) / (landing - takeoff);
    EXPECT_NEAR(d.root_pos.x() - b.root_pos.x(), frac * delta, 1e-12) << "frame " << k;
    EXPECT_EQ(d.root_pos.y(), b.root_pos.y());
    EXPECT_TRUE(d.joint_angles == b.joint_angles);
  }
}

TEST(EditTest, HighJumpRuleEditReturnsToZeroAtLanding) {
  DatasetOptions opt = HighJump();
  opt.mode = DatasetMode::kRuleEditDense;
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), opt);
  const EditedMotion e = ds.Edit(0.3);
  const auto& plan = ds.plan();
  const int apex = plan.frame_index[*plan.IndexOfLabel("apex")];
  const int landing = plan.frame_index[*plan.IndexOfLabel("landing")];
  EXPECT_NEAR(e.dense.frame(apex).root_pos.y() - ds.base().frame(apex).root_pos.y(), 0.1, 1e-12);
  EXPECT_EQ(e.dense.frame(landing).root_pos.y(), ds.base().frame(landing).root_pos.y());
  EXPECT_EQ(e.dense.frames().back().root_pos.y(), ds.base().frames().back().root_pos.y());
}

TEST(EditTest, OffsetAtInterpolatesKeyOffsets) {
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  const EditedMotion e = ds.Edit(0.7);
  const auto& ph = ds.plan().key_phases;
  for (std::size_t i = 0; i < ph.size(); ++i) EXPECT_NEAR(ds.OffsetAt(e, ph[i]).x(), e.key_offsets[i], 1e-12);
  const std::size_t landing = *ds.plan().IndexOfLabel("landing");
  const double mid = 0.5 * (ph[landing - 1] + ph[landing]);
  EXPECT_NEAR(ds.OffsetAt(e, mid).x(), 0.5 * (e.key_offsets[landing - 1] + e.key_offsets[landing]), 1e-12);
  EXPECT_EQ(ds.OffsetAt(e, 0.0).x(), 0.0);
  EXPECT_EQ(ds.OffsetAt(e, 0.3).y(), 0.0);
}

TEST(EditTest, DatasetModeNamesRoundTrip) {
  for (DatasetMode m : {DatasetMode::kKeyframeEdit, DatasetMode::kRuleEditDense})
    EXPECT_EQ(ParseDatasetMode(DatasetModeName(m)), m);
  EXPECT_TRUE(RaisesCode([] { ParseDatasetMode("dense"); }, ErrorCode::kConfig));
  EXPECT_TRUE(RaisesCode([] { ParseTask("long_jump"); }, ErrorCode::kConfig));
}

TEST(MotionIoTest, SaveLoadRoundTripIsExact) {
  const sim::Morphology m = sim::DefaultCharacter();
  const EditedDataset ds = BuildDataset(m, FarJump());
  const auto path = (keytrack::testing::ScratchDir("io") / "motion.json").string();
  SaveMotion(ds.base(), path);
  const ReferenceMotion loaded = LoadMotion(path, &m);
  EXPECT_TRUE(loaded == ds.base());
}

TEST(MotionIoTest, MalformedFilesAreReportedWithCodes) {
  const auto dir = keytrack::testing::ScratchDir("bad");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream((dir / name).string()) << text;
    return (dir / name).string();
  };
  const EditedDataset ds = BuildDataset(sim::DefaultCharacter(), FarJump());
  nlohmann::json good = MotionToJson(ds.base());

  EXPECT_TRUE(RaisesCode([&] { LoadMotion(write("a.json", "{\"frames\": [")); }, ErrorCode::kParse));
  nlohmann::json v = good;
  v["schema_version"] = 99;
  EXPECT_TRUE(RaisesCode([&] { LoadMotion(write("b.json", v.dump())); }, ErrorCode::kSchema));
  nlohmann::json missing = good;
  missing.erase("frame_rate_hz");
  EXPECT_TRUE(RaisesCode([&] { LoadMotion(write("c.json", missing.dump())); }, ErrorCode::kSchema));
  EXPECT_TRUE(RaisesCode([&] { LoadMotion((dir / "absent.json").string()); }, ErrorCode::kIo));

  sim::Morphology other = sim::DefaultCharacter();
  other.id = "other";
  const std::string ok = write("d.json", good.dump());
  EXPECT_TRUE(RaisesCode([&] { LoadMotion(ok, &other); }, ErrorCode::kMorphologyMismatch));
}

}  // namespace
}  // namespace keytrack::motion
