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


#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "keytrack/common/random.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/trainer/env.hpp"
#include "keytrack/trainer/gae.hpp"
#include "keytrack/trainer/ppo.hpp"
#include "keytrack/trainer/stage1.hpp"
#include "keytrack/trainer/trainer.hpp"
#include "test_util.hpp"

namespace keytrack::train {
namespace {

// A_t = sum_l (gamma lambda)^l delta_{t+l}, summed directly until the
// episode ends or the sequence runs out.
std::vector<double> BruteForceGae(const std::vector<double>& r, const std::vector<double>& v,
                                  const std::vector<double>& nv, const std::vector<std::uint8_t>& done, double gamma,
                                  double lambda) {
  const std::size_t n = r.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += weight * (r[k] + gamma * nv[k] - v[k]);
      if (done[k]) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

TEST(GaeTest, RecursionMatchesTheExplicitSumForBothDiscounts) {
  Rng rng = MakeRng(1, {});
  for (double gamma : {1.0, 0.99}) {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 60);
      std::vector<double> r(n), v(n), nv(n);
      std::vector<std::uint8_t> done(n);
      for (int t = 0; t < n; ++t) {
        r[t] = StandardNormal(rng);
        v[t] = StandardNormal(rng);
        done[t] = Uniform(rng, 0, 1) < 0.1;
      }
      for (int t = 0; t < n; ++t) nv[t] = done[t] ? 0.0 : (t + 1 < n ? v[t + 1] : StandardNormal(rng));
      const GaeResult g = ComputeGae(r, v, nv, done, gamma, 0.95);
      const auto brute = BruteForceGae(r, v, nv, done, gamma, 0.95);
      for (int t = 0; t < n; ++t) {
        ASSERT_NEAR(g.advantages[t], brute[t], 1e-12);
        ASSERT_NEAR(g.returns[t], brute[t] + v[t], 1e-12);
      }
    }
  }
}

TEST(GaeTest, LambdaOneGivesDiscountedReturnToGo) {
  const std::vector<double> r = {1.0, 2.0, 3.0};
  const std::vector<double> v = {0.5, -0.5, 0.25};
  const std::vector<double> nv = {-0.5, 0.25, 10.0};  // last is the bootstrap
  const GaeResult g = ComputeGae(r, v, nv, {0, 0, 0}, 0.9, 1.0);
  EXPECT_NEAR(g.returns[0], 1.0 + 0.9 * 2.0 + 0.81 * 3.0 + 0.729 * 10.0, 1e-12);
  EXPECT_NEAR(g.returns[2], 3.0 + 0.9 * 10.0, 1e-12);
}

TEST(GaeTest, StandardizeAndAggregate) {
  const VecX x = (VecX(4) << 1.0, 2.0, 3.0, 6.0).finished();
  const VecX s = Standardize(x);
  EXPECT_NEAR(s.mean(), 0.0, 1e-12);
  EXPECT_NEAR(s.squaredNorm() / 4.0, 1.0, 1e-12);
  EXPECT_TRUE(Standardize(VecX::Constant(5, 3.0)).isZero());
  const VecX agg = AggregateAdvantages(x, VecX::Constant(4, 2.0), 1.0, 0.5);
  EXPECT_LT((agg - s).norm(), 1e-12);
  const VecX both = AggregateAdvantages(x, 2.0 * x, 1.0, 0.5);
  EXPECT_LT((both - 1.5 * s).norm(), 1e-12);
}

struct SurrogateFixture {
  nets::GaussianHead head{{3, 5, 2}, -0.4};
  MatX inputs, actions, old_mean;
  VecX old_logp, adv, old_log_std;

  explicit SurrogateFixture(std::uint64_t seed) {
    Rng rng = MakeRng(seed, {});
    head.mlp().Initialize(rng);
    const int batch = 16;
    inputs = MatX(3, batch);
    for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = StandardNormal(rng);
    // Behaviour policy: a perturbed copy, so some ratios leave the clip range.
    nets::GaussianHead old = head;
    VecX p = old.GetFlat();
    for (int i = 0; i < p.size(); ++i) p[i] += 0.15 * StandardNormal(rng);
    old.SetFlat(p);
    old_mean = old.Mean(inputs);
    old_log_std = old.log_std();
    actions = MatX(2, batch);
    old_logp = VecX(batch);
    adv = VecX(batch);
    for (int c = 0; c < batch; ++c) {
      const nets::ActionSample s = old.Sample(inputs.col(c), rng, false);
      actions.col(c) = s.action;
      old_logp[c] = s.log_prob;
      adv[c] = StandardNormal(rng);
    }
  }

  PolicyLoss Loss(const nets::GaussianHead& h) const {
    return ClippedSurrogate(h, inputs, actions, old_logp, adv, old_mean, old_log_std, 0.2, 0.01);
  }
};

TEST(PpoTest, SurrogateGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const SurrogateFixture f(seed);
    const PolicyLoss l = f.Loss(f.head);
    EXPECT_GT(l.clip_frac, 0.0);
    const VecX p0 = f.head.GetFlat();
    const double h = 1e-6;
    for (int i = 0; i < p0.size(); ++i) {
      nets::GaussianHead plus = f.head, minus = f.head;
      VecX p = p0;
      p[i] += h;
      plus.SetFlat(p);
      p[i] -= 2 * h;
      minus.SetFlat(p);
      const double fd = (f.Loss(plus).loss - f.Loss(minus).loss) / (2 * h);
      ASSERT_NEAR(l.grad[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "seed " << seed << " param " << i;
    }
  }
}

TEST(PpoTest, KlIsZeroAgainstItselfAndMatchesTheClosedForm) {
  const SurrogateFixture f(5);
  const MatX mean = f.head.Mean(f.inputs);
  const PolicyLoss self = ClippedSurrogate(f.head, f.inputs, f.actions, f.old_logp, f.adv, mean, f.head.log_std(),
                                           0.2, 0.0);
  EXPECT_NEAR(self.kl, 0.0, 1e-15);
  double expected = 0.0;
  for (int c = 0; c < mean.cols(); ++c)
    for (int k = 0; k < 2; ++k) {
      const double s0 = std::exp(f.old_log_std[k]), s1 = std::exp(f.head.log_std()[k]);
      const double dm = f.old_mean(k, c) - mean(k, c);
      expected += std::log(s1 / s0) + (s0 * s0 + dm * dm) / (2 * s1 * s1) - 0.5;
    }
  EXPECT_NEAR(f.Loss(f.head).kl, expected / mean.cols(), 1e-12);
}

TEST(PpoTest, ValueAndLipschitzGradientsMatchFiniteDifferences) {
  Rng rng = MakeRng(6, {});
  nets::Mlp v({3, 6, 1});
  v.Initialize(rng);
  MatX x(3, 10), noise(3, 10);
  VecX targets(10);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = StandardNormal(rng);
    noise.data()[i] = 0.05 * StandardNormal(rng);
  }
  for (int i = 0; i < 10; ++i) targets[i] = StandardNormal(rng);
  const ValueLoss vl = ValueRegression(v, x, targets, 0.7);
  nets::GaussianHead head({3, 6, 2}, -1.0);
  head.mlp().Initialize(rng);
  VecX lg = VecX::Zero(head.num_params());
  LipschitzPenalty(head, x, noise, 3.0, lg);
  const double h = 1e-6;
  for (int i = 0; i < v.num_params(); ++i) {
    nets::Mlp a = v, b = v;
    VecX p = v.params();
    p[i] += h;
    a.set_params(p);
    p[i] -= 2 * h;
    b.set_params(p);
    const double fd = (ValueRegression(a, x, targets, 0.7).loss - ValueRegression(b, x, targets, 0.7).loss) / (2 * h);
    ASSERT_NEAR(vl.grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (int i = 0; i < head.num_params(); ++i) {
    nets::GaussianHead a = head, b = head;
    VecX p = head.GetFlat();
    p[i] += h;
    a.SetFlat(p);
    p[i] -= 2 * h;
    b.SetFlat(p);
    VecX scratch = VecX::Zero(head.num_params());
    const double fd = (LipschitzPenalty(a, x, noise, 3.0, scratch) - LipschitzPenalty(b, x, noise, 3.0, scratch)) /
                      (2 * h);
    ASSERT_NEAR(lg[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(PpoTest, LearningRateFollowsTheKlSchedule) {
  EXPECT_DOUBLE_EQ(AdaptLearningRate(1e-3, 0.03, 0.01, 1e-5, 1e-2), 5e-4);
  EXPECT_DOUBLE_EQ(AdaptLearningRate(1e-3, 0.004, 0.01, 1e-5, 1e-2), 2e-3);
  EXPECT_DOUBLE_EQ(AdaptLearningRate(1e-3, 0.01, 0.01, 1e-5, 1e-2), 1e-3);
  EXPECT_DOUBLE_EQ(AdaptLearningRate(8e-3, 0.0, 0.01, 1e-5, 1e-2), 1e-2);
  EXPECT_DOUBLE_EQ(AdaptLearningRate(1.5e-5, 1.0, 0.01, 1e-5, 1e-2), 1e-5);
}

TEST(PpoTest, MinibatchesPartitionTheBatch) {
  for (int n : {1, 7, 100, 4800}) {
    for (int count : {1, 3, 4}) {
      Rng a(9), b(9);
      const auto mb = Minibatches(n, count, a);
      EXPECT_EQ(mb, Minibatches(n, count, b));
      std::vector<int> seen;
      std::size_t lo = n, hi = 0;
      for (const auto& m : mb) {
        seen.insert(seen.end(), m.begin(), m.end());
        lo = std::min(lo, m.size());
        hi = std::max(hi, m.size());
      }
      std::sort(seen.begin(), seen.end());
      ASSERT_EQ(static_cast<int>(seen.size()), n);
      for (int i = 0; i < n; ++i) ASSERT_EQ(seen[i], i);
      if (n >= count) {
        EXPECT_LE(hi - lo, 1u);
      }
    }
  }
}

class RolloutTest : public ::testing::Test {
 protected:
  sim::Morphology morph = sim::DefaultCharacter();
  motion::EditedDataset ds = motion::BuildDataset(morph, motion::DatasetOptions{});
  EnvConfig cfg;
};

// Property: for any adaptive intervals within bounds, the phase never
// decreases, stays in [0, 1], and each keyframe is rewarded at most once.
TEST_F(RolloutTest, PhaseIsMonotonicAndKeyframesFireAtMostOnce) {
  TrackingEnv env(&ds, &morph, cfg, 3);
  Rng rng = MakeRng(4, {});
  for (int episode = 0; episode < 20; ++episode) {
    env.Reset();
    std::vector<int> fires(ds.plan().size(), 0);
    double phi = env.phi();
    for (int t = 0; t < 400; ++t) {
      const auto adapt = adapters::AdaptPhase(2.0 * StandardNormal(rng), env.dphi_base());
      VecX action(env.act_dim());
      for (int j = 0; j < action.size(); ++j) action[j] = 0.3 * StandardNormal(rng);
      const StepResult r = env.Step(action, adapt.dphi_ada);
      ASSERT_GE(r.phi, phi);
      ASSERT_LE(r.phi, 1.0);
      ASSERT_NEAR(r.phi - phi, r.dphi, 1e-15);
      phi = r.phi;
      if (r.key) ++fires[*r.key];
      if (r.reward.sparse != 0.0 && !r.failure) {
        ASSERT_TRUE(r.key.has_value());
      }
      if (r.done) break;
    }
    int total = 0;
    for (int c : fires) {
      ASSERT_LE(c, 1);
      total += c;
    }
    EXPECT_LE(total, static_cast<int>(ds.plan().size()));
  }
}

TEST_F(RolloutTest, FixedIntervalEpisodeVisitsEveryKeyframe) {
  cfg.rsi = false;
  cfg.randomization.enabled = false;
  cfg.termination.min_root_z = -1e9;  // never terminate early
  cfg.termination.max_abs_pitch = 1e9;
  cfg.termination.tracking_threshold = 1e9;
  TrackingEnv env(&ds, &morph, cfg, 5);
  env.ResetTo(0.4, 0.0, sim::RandomizationDraw{});
  int keys = 0;
  for (int t = 0; t < 1000; ++t) {
    const StepResult r = env.Step(VecX::Zero(env.act_dim()), env.dphi_base());
    if (r.key) ++keys;
    if (r.done) {
      EXPECT_EQ(r.termination, sim::Termination::kComplete);
      break;
    }
  }
  const int at_zero = ds.plan().key_phases.front() == 0.0 ? 1 : 0;
  EXPECT_EQ(keys, static_cast<int>(ds.plan().size()) - at_zero);
}

// Property: per-tick rewards are paid per unit of phase, so a slower phase
// earns proportionally less per tick and the base interval earns the
// unweighted reward.
TEST_F(RolloutTest, PerTickRewardScalesWithThePhaseAdvance) {
  cfg.rsi = false;
  cfg.randomization.enabled = false;
  EnvConfig plain = cfg;
  plain.reward.phase_weighted = false;
  Rng rng = MakeRng(6, {});
  for (const double ratio : {1.0, 0.25, 0.6, 1.7}) {
    TrackingEnv weighted_env(&ds, &morph, cfg, 7);
    TrackingEnv plain_env(&ds, &morph, plain, 7);
    weighted_env.ResetTo(0.4, 0.0, sim::RandomizationDraw{});
    plain_env.ResetTo(0.4, 0.0, sim::RandomizationDraw{});
    for (int t = 0; t < 20; ++t) {
      VecX action(weighted_env.act_dim());
      for (int j = 0; j < action.size(); ++j) action[j] = 0.3 * StandardNormal(rng);
      const double dphi = ratio * weighted_env.dphi_base();
      const StepResult w = weighted_env.Step(action, dphi);
      const StepResult p = plain_env.Step(action, dphi);
      ASSERT_EQ(w.phi, p.phi);
      EXPECT_NEAR(w.reward.dense, ratio * p.reward.dense, 1e-12 * (1.0 + std::abs(p.reward.dense)));
      EXPECT_EQ(w.reward.sparse, p.reward.sparse);  // keyframe rewards are per event
      if (w.done) break;
    }
  }
}

bool SameBuffer(const RolloutBuffer& a, const RolloutBuffer& b) {
  return a.obs == b.obs && a.raw_obs == b.raw_obs && a.base_action == b.base_action && a.base_logp == b.base_logp &&
         a.r_sparse == b.r_sparse && a.r_dense == b.r_dense && a.done == b.done && a.phi == b.phi &&
         a.psi == b.psi && a.v_sparse == b.v_sparse && a.boot_dense == b.boot_dense;
}

TEST_F(RolloutTest, CollectionDoesNotDependOnTheWorkerCount) {
  TrainConfig tc;
  tc.n_envs = 6;
  const PolicyBundle policy = NewStage1Policy(ds, morph, cfg, tc);
  ActOptions opt;
  Collector one(ds, morph, cfg, tc.n_envs, 7, kStage1Tag);
  Collector four(ds, morph, cfg, tc.n_envs, 7, kStage1Tag);
  for (int round = 0; round < 2; ++round) {
    std::vector<EpisodeStat> fa, fb;
    const RolloutBuffer a = one.Collect(policy, opt, 40, 1, &fa);
    const RolloutBuffer b = four.Collect(policy, opt, 40, 4, &fb);
    EXPECT_TRUE(SameBuffer(a, b)) << "round " << round;
    ASSERT_EQ(fa.size(), fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(fa[i].return_sparse, fb[i].return_sparse);
  }
}

TEST_F(RolloutTest, BufferGaeChainsEachEnvironmentSeparately) {
  TrainConfig tc;
  tc.n_envs = 3;
  const PolicyBundle policy = NewStage1Policy(ds, morph, cfg, tc);
  Collector c(ds, morph, cfg, tc.n_envs, 8, kStage1Tag);
  const RolloutBuffer buf = c.Collect(policy, ActOptions{}, 30, 1, nullptr);
  const GaeResult g = BufferGae(buf, buf.r_dense, buf.v_dense, buf.boot_dense, 0.99, 0.95);
  for (int e = 0; e < buf.n_envs; ++e) {
    std::vector<double> r, v, nv;
    std::vector<std::uint8_t> d;
    for (int t = 0; t < buf.n_steps; ++t) {
      const int col = buf.col(e, t);
      r.push_back(buf.r_dense[col]);
      v.push_back(buf.v_dense[col]);
      d.push_back(buf.done[col]);
      nv.push_back(d.back() ? 0.0 : (t + 1 < buf.n_steps ? buf.v_dense[buf.col(e, t + 1)] : buf.boot_dense[e]));
    }
    const auto brute = BruteForceGae(r, v, nv, d, 0.99, 0.95);
    for (int t = 0; t < buf.n_steps; ++t) ASSERT_NEAR(g.advantages[buf.col(e, t)], brute[t], 1e-12);
  }
}

TEST_F(RolloutTest, TrainingMetricsAreIdenticalAcrossWorkerCounts) {
  TrainConfig tc;
  tc.n_envs = 4;
  tc.n_steps = 20;
  tc.stage1_iterations = 2;
  std::vector<std::string> lines[2];
  for (int w : {1, 3}) {
    tc.workers = w;
    const StageResult r = TrainStage1(ds, morph, cfg, tc);
    for (IterationMetrics m : r.metrics) {
      m.wallclock = 0.0;
      lines[w == 1 ? 0 : 1].push_back(m.ToJson().dump());
    }
    EXPECT_TRUE(r.bundle.actor_norm.frozen());
  }
  EXPECT_EQ(lines[0], lines[1]);
  ASSERT_EQ(lines[0].size(), 2u);
}

TEST_F(RolloutTest, MetricsStreamHasOneJsonLinePerIteration) {
  TrainConfig tc;
  tc.n_envs = 2;
  tc.n_steps = 10;
  tc.stage1_iterations = 3;
  std::ostringstream sink;
  TrainStage1(ds, morph, cfg, tc, &sink);
  std::istringstream in(sink.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("iter").get<int>(), n);
    for (const char* k : {"mean_return_sparse", "mean_return_dense", "kl", "clip_frac", "lr", "success_rate_train",
                          "wallclock"})
      EXPECT_TRUE(j.contains(k)) << k;
    ++n;
  }
  EXPECT_EQ(n, 3);
}

}  // namespace
}  // namespace keytrack::train
