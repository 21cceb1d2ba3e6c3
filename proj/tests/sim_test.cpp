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
#include <vector>

#include <gtest/gtest.h>

#include "keytrack/common/random.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/sim/dynamics.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "keytrack/sim/randomization.hpp"
#include "keytrack/sim/step.hpp"
#include "keytrack/sim/world.hpp"

namespace keytrack::sim {
namespace {

SimConfig NoContact() {
  SimConfig c;
  c.contact.enabled = false;
  return c;
}

TEST(KinematicsTest, LegChainMatchesHandComputedTrigonometry) {
  const Morphology m = DefaultCharacter();
  VecX q = VecX::Zero(m.dof());
  q << 0.3, 1.2, 0.2, 0.5, -0.9, 0.1, -0.2, 0.0, 0.3;
  const BodyPoses p = ForwardKinematics(m, q);
  // Left leg: hip at the root origin, knee 0.25 below along the thigh axis.
  const double thigh = 0.2 + 0.5, shank = thigh - 0.9, foot = shank + 0.1;
  const Vec2 hip(0.3, 1.2);
  const Vec2 knee = hip + 0.25 * Vec2(std::sin(thigh), -std::cos(thigh));
  const Vec2 ankle = knee + 0.25 * Vec2(std::sin(shank), -std::cos(shank));
  EXPECT_TRUE(p.origin[2].isApprox(knee, 1e-12));
  EXPECT_TRUE(p.origin[3].isApprox(ankle, 1e-12));
  EXPECT_NEAR(p.angle[3], foot, 1e-15);
  // Toe point sits at (0.12, -0.05) in the foot frame.
  const Vec2 toe = ankle + Vec2(0.12 * std::cos(foot) + 0.05 * std::sin(foot),
                                0.12 * std::sin(foot) - 0.05 * std::cos(foot));
  EXPECT_TRUE(p.foot_points[1].isApprox(toe, 1e-12));
}

TEST(KinematicsTest, RootFrameIsInvariantToRigidMotion) {
  const Morphology m = DefaultCharacter();
  Rng rng = MakeRng(11, {});
  VecX q(m.dof());
  for (int i = 0; i < q.size(); ++i) q[i] = Uniform(rng, -0.5, 0.5);
  VecX moved = q;
  moved[0] += 3.0;
  moved[1] -= 0.7;
  moved[2] += 0.4;
  const auto a = ToRootFrame(ForwardKinematics(m, q), ForwardKinematics(m, q).com);
  const auto b = ToRootFrame(ForwardKinematics(m, moved), ForwardKinematics(m, moved).com);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].isApprox(b[i], 1e-12));
}

TEST(DynamicsTest, MassMatrixIsSymmetricPositiveDefiniteAndMatchesInverseDynamics) {
  const Model model = Model::Build(DefaultCharacter(), RandomizationDraw{}, NoContact());
  Rng rng = MakeRng(5, {});
  for (int trial = 0; trial < 10; ++trial) {
    VecX q(model.nv), qd(model.nv), qdd(model.nv);
    for (int i = 0; i < model.nv; ++i) {
      q[i] = Uniform(rng, -1, 1);
      qd[i] = Uniform(rng, -2, 2);
      qdd[i] = Uniform(rng, -3, 3);
    }
    const Placement pl = Place(model, q);
    const MatX h = MassMatrix(model, pl);
    EXPECT_TRUE(h.isApprox(h.transpose(), 1e-12));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatX>(h).eigenvalues().minCoeff(), 0.0);
    const VecX lhs = InverseDynamics(model, pl, qd, qdd) - InverseDynamics(model, pl, qd, VecX::Zero(model.nv));
    EXPECT_LT((lhs - h * qdd).norm(), 1e-9 * (1.0 + lhs.norm()));
  }
}

TEST(DynamicsTest, KineticEnergyMatchesPerLinkSum) {
  // Oracle: sum over links of 1/2 m |v_com|^2 + 1/2 I w^2, with velocities
  // from central differences of forward kinematics, plus joint rotor inertia.
  const Morphology m = DefaultCharacter();
  const Model model = Model::Build(m, RandomizationDraw{}, NoContact());
  Rng rng = MakeRng(6, {});
  VecX q(model.nv), qd(model.nv);
  for (int i = 0; i < model.nv; ++i) {
    q[i] = Uniform(rng, -1, 1);
    qd[i] = Uniform(rng, -2, 2);
  }
  const double h = 1e-6;
  const BodyPoses plus = ForwardKinematics(m, q + h * qd);
  const BodyPoses minus = ForwardKinematics(m, q - h * qd);
  double expected = 0.0;
  for (int l = 0; l < m.num_links(); ++l) {
    const Vec2 v = (plus.com[l] - minus.com[l]) / (2 * h);
    const double w = (plus.angle[l] - minus.angle[l]) / (2 * h);
    expected += 0.5 * m.links[l].mass * v.squaredNorm() + 0.5 * m.links[l].inertia * w * w;
  }
  for (int j = 0; j < m.num_joints(); ++j) expected += 0.5 * m.joints[j].armature * qd[3 + j] * qd[3 + j];
  EXPECT_NEAR(KineticEnergy(model, q, qd), expected, 1e-6 * std::max(1.0, expected));
}

TEST(PhysicsOracleTest, FreeFlightCentreOfMassFollowsBallisticArc) {
  const Model model = Model::Build(DefaultCharacter(), RandomizationDraw{}, NoContact());
  Rng rng = MakeRng(7, {});
  SimState s = SimState::Zero(model);
  for (int i = 0; i < model.nv; ++i) {
    s.q[i] = Uniform(rng, -0.3, 0.3);
    s.qd[i] = Uniform(rng, -1, 1);
  }
  s.q[1] = 2.0;
  const Vec2 c0 = CenterOfMass(model, s.q);
  const double h = 1e-7;
  const Vec2 v0 = (CenterOfMass(model, s.q + h * s.qd) - CenterOfMass(model, s.q - h * s.qd)) / (2 * h);
  const PdCommand cmd{VecX(s.q.tail(model.num_joints()))};
  double max_err = 0.0;
  for (int k = 1; k <= 15; ++k) {  // 0.3 s
    s = Step(model, s, cmd, 10, 0.002);
    const double t = 0.02 * k;
    const Vec2 c = CenterOfMass(model, s.q);
    max_err = std::max({max_err, std::abs(c.x() - (c0.x() + v0.x() * t)),
                        std::abs(c.y() - (c0.y() + v0.y() * t - 0.5 * kStandardGravity * t * t))});
  }
  EXPECT_LT(max_err, 1e-3);
}

TEST(PhysicsOracleTest, PendulumPeriodMatchesSmallAngleFormula) {
  const double length = 0.5;
  Model model = Model::Build(PendulumMorphology(length), RandomizationDraw{}, NoContact());
  model.kp.setZero();
  model.kd.setZero();
  SimState s = SimState::Zero(model);
  s.q[3] = 0.05;
  const PdCommand cmd{VecX::Zero(model.num_joints())};
  const double dt = 0.002;
  double prev = s.q[3];
  std::vector<double> crossings;
  for (int k = 0; k < 2000; ++k) {
    s = Step(model, s, cmd, 1, dt);
    if (prev > 0 && s.q[3] <= 0) crossings.push_back(s.time - dt * s.q[3] / (s.q[3] - prev));
    prev = s.q[3];
  }
  ASSERT_GE(crossings.size(), 3u);
  const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  const double analytic = 2 * kPi * std::sqrt(length / kStandardGravity);
  EXPECT_LT(std::abs(period - analytic) / analytic, 0.02);
}

TEST(PhysicsOracleTest, ContactFreeEnergyIsConserved) {
  Model model = Model::Build(DefaultCharacter(), RandomizationDraw{}, NoContact());
  model.kp.setZero();
  model.kd.setZero();
  Rng rng = MakeRng(3, {});
  SimState s = SimState::Zero(model);
  for (int i = 0; i < model.nv; ++i) {
    s.q[i] = Uniform(rng, -0.5, 0.5);
    s.qd[i] = Uniform(rng, -2, 2);
  }
  s.q[1] = 5.0;
  const double e0 = KineticEnergy(model, s.q, s.qd) + PotentialEnergy(model, s.q);
  const PdCommand cmd{VecX::Zero(model.num_joints())};
  double drift = 0.0;
  for (int k = 0; k < 50; ++k) {  // 1 s
    s = Step(model, s, cmd, 10, 0.002);
    drift = std::max(drift, std::abs(KineticEnergy(model, s.q, s.qd) + PotentialEnergy(model, s.q) - e0));
  }
  EXPECT_LT(drift / std::abs(e0), 0.005);
}

TEST(ContactTest, StandingPoseIsHeldAndSupportsBodyWeight) {
  const Morphology m = DefaultCharacter();
  const Model model = Model::Build(m, RandomizationDraw{}, SimConfig{});
  // The first frame of the generated reference is a crouched stance with the
  // centre of mass over the feet.
  const VecX q = motion::BuildDataset(m, motion::DatasetOptions{}).base().frame(0).q();
  const ResetResult r = ResetFromFrame(model, q, VecX::Zero(m.dof()), RandomizationDraw{});
  SimState s = r.state;
  const PdCommand cmd{VecX(q.tail(6))};
  StepInfo info;
  for (int k = 0; k < 100; ++k) s = Step(model, s, cmd, 10, 0.002, &info);
  EXPECT_LT(s.qd.norm(), 0.05);
  EXPECT_LT(std::abs(s.pitch()), 0.1);
  EXPECT_LT(info.max_penetration, 0.01);
  EXPECT_GT(LowestFootHeight(ForwardKinematics(m, s.q)), -0.01);
}

TEST(ContactTest, ResetLiftsPenetratingFrameOntoTheGround) {
  const Morphology m = DefaultCharacter();
  const Model model = Model::Build(m, RandomizationDraw{}, SimConfig{});
  VecX q = VecX::Zero(m.dof());
  q[1] = 0.3;  // straight legs are 0.55 long: feet below ground
  const ResetResult r = ResetFromFrame(model, q, VecX::Zero(m.dof()), RandomizationDraw{});
  EXPECT_GT(r.lifted_by, 0.0);
  EXPECT_NEAR(LowestFootHeight(ForwardKinematics(m, r.state.q)), 0.0, 1e-12);
}

TEST(RandomizationTest, DrawsStayInsideConfiguredRanges) {
  const RandomizationConfig c;
  Rng rng = MakeRng(9, {});
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(SampleRandomization(c, rng).WithinRanges(c));
  const RandomizationConfig n = RandomizationConfig::Nominal();
  EXPECT_EQ(SampleRandomization(n, rng), RandomizationDraw{});
}

TEST(RandomizationTest, InvalidRangesAreRejected) {
  RandomizationConfig c;
  c.friction = {1.0, 0.5};
  EXPECT_THROW(c.Validate(), Error);
}

TEST(TerminationTest, FallingTakesPriorityOverTrackingAndCompletion) {
  const Morphology m = DefaultCharacter();
  const Model model = Model::Build(m, RandomizationDraw{}, SimConfig{});
  SimState s = SimState::Zero(model);
  s.q[1] = 0.2;
  VecX ref = s.q;
  ref[0] = 5.0;
  const TerminationConfig cfg;
  EXPECT_EQ(CheckTermination(model, s, ref, cfg, false, true, true), Termination::kFell);
  s.q[1] = 0.5;
  ref[1] = 0.5;
  EXPECT_EQ(CheckTermination(model, s, ref, cfg, false, false, true), Termination::kTrackingFailure);
  // Relaxed mode only checks tracking at keyframes.
  EXPECT_EQ(CheckTermination(model, s, ref, cfg, true, false, true), Termination::kComplete);
  EXPECT_EQ(CheckTermination(model, s, ref, cfg, true, true, false), Termination::kTrackingFailure);
  EXPECT_EQ(CheckTermination(model, s, s.q, cfg, false, false, false), Termination::kAlive);
}

}  // namespace
}  // namespace keytrack::sim
