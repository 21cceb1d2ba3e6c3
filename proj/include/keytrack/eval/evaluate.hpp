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

#ifndef KEYTRACK_EVAL_EVALUATE_HPP_
#define KEYTRACK_EVAL_EVALUATE_HPP_

#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "keytrack/common/random.hpp"
#include "keytrack/eval/metrics.hpp"
#include "keytrack/sim/kinematics.hpp"
#include "keytrack/trainer/env.hpp"
#include "keytrack/trainer/policy.hpp"

namespace keytrack::eval {

// Task-variable bands: easy = inside the training range, hard = the
// extrapolation ranges on either side.
struct PsiBands {
  motion::EditRange easy{0.25, 0.6};
  std::vector<motion::EditRange> hard = {{0.1, 0.25}, {0.6, 0.8}};

  void Validate() const {
    Require(easy.lo <= easy.hi, ErrorCode::kConfig, "eval.easy band is empty");
    for (const auto& h : hard) Require(h.lo <= h.hi, ErrorCode::kConfig, "eval.hard band is empty");
  }
};

struct PsiPoint {
  double psi = 0.0;
  std::string band;  // "easy" or "hard"
};

enum class BandSelect { kEasy, kHard, kAll };

inline BandSelect ParseBand(const std::string& s) {
  if (s == "easy") return BandSelect::kEasy;
  if (s == "hard") return BandSelect::kHard;
  if (s == "all") return BandSelect::kAll;
  Fail(ErrorCode::kConfig, "band must be one of easy, hard, all (got '" + s + "')");
}

// `per_range` cell-centred points in each range, so shared band edges are
// never evaluated twice.
inline std::vector<PsiPoint> BandGrid(const PsiBands& bands, int per_range, BandSelect which) {
  Require(per_range >= 1, ErrorCode::kConfig, "eval.points_per_range must be >= 1");
  std::vector<PsiPoint> out;
  auto add = [&](const motion::EditRange& r, const std::string& name) {
    for (int k = 0; k < per_range; ++k) out.push_back({r.lo + (k + 0.5) * (r.hi - r.lo) / per_range, name});
  };
  if (which != BandSelect::kHard) add(bands.easy, "easy");
  if (which != BandSelect::kEasy)
    for (const auto& h : bands.hard) add(h, "hard");
  return out;
}

struct EvalConfig {
  double success_ratio = 0.77;  // success threshold = ratio * character height
  bool deterministic = true;
  bool randomization = true;
  int episodes_per_psi = 1;
  int points_per_range = 4;
  int workers = 1;
  bool record_traces = false;
  bool force_zero_delta = false;  // diagnostic: adapters' phase delta pinned to 0

  void Validate() const {
    Require(success_ratio > 0.0, ErrorCode::kConfig, "eval.success_ratio must be positive");
    Require(episodes_per_psi >= 1, ErrorCode::kConfig, "eval.episodes_per_psi must be >= 1");
    Require(points_per_range >= 1, ErrorCode::kConfig, "eval.points_per_range must be >= 1");
    Require(workers >= 1, ErrorCode::kConfig, "eval.workers must be >= 1");
  }
};

inline double SuccessThreshold(const sim::Morphology& morph, const EvalConfig& cfg) {
  return cfg.success_ratio * morph.height;
}

inline train::PolicyMode ModeFor(const train::PolicyBundle& b) {
  if (b.has_track) return train::PolicyMode::kAdapters;
  if (b.has_phase) return train::PolicyMode::kBaseAdaptivePhase;
  return train::PolicyMode::kBase;
}

// Phase window between the takeoff and landing keyframes of the motion.
inline std::pair<double, double> FlightWindow(const motion::KeyframePlan& plan) {
  const auto t = plan.IndexOfLabel("takeoff");
  const auto l = plan.IndexOfLabel("landing");
  Require(t.has_value() && l.has_value(), ErrorCode::kInvalidArgument, "motion has no takeoff/landing keyframes");
  return {plan.key_phases[*t], plan.key_phases[*l]};
}

// Evaluation environment settings: relaxed termination whose tracking
// threshold is the success threshold, optional nominal dynamics.
inline train::EnvConfig EvalEnvConfig(const train::EnvConfig& env_cfg, const sim::Morphology& morph,
                                      const EvalConfig& cfg) {
  train::EnvConfig ec = env_cfg;
  ec.termination.tracking_threshold = SuccessThreshold(morph, cfg);
  if (!cfg.randomization) ec.randomization = sim::RandomizationConfig::Nominal();
  return ec;
}

inline void CheckCompatible(const train::PolicyBundle& policy, const train::TrackingEnv& env) {
  Require(policy.layout.num_joints == env.layout().num_joints && policy.layout.history == env.layout().history,
          ErrorCode::kMorphologyMismatch, "checkpoint observation layout does not match the task body");
  Require(std::abs(policy.dphi_base - env.dphi_base()) < 1e-12, ErrorCode::kMorphologyMismatch,
          "checkpoint phase interval does not match the task motion");
}

// One evaluation episode from phase 0.
inline EpisodeReport RunEpisode(const train::PolicyBundle& policy, const motion::EditedDataset& ds,
                                const sim::Morphology& morph, const train::EnvConfig& env_cfg, const EvalConfig& cfg,
                                double psi, std::uint64_t seed) {
  const train::EnvConfig ec = EvalEnvConfig(env_cfg, morph, cfg);
  train::TrackingEnv env(&ds, &morph, ec, DeriveSeed(seed, {0}));
  CheckCompatible(policy, env);
  env.set_relaxed(true);
  const sim::RandomizationDraw draw =
      cfg.randomization ? sim::SampleRandomization(ec.randomization, env.rng()) : sim::RandomizationDraw{};
  env.ResetTo(psi, 0.0, draw);
  Rng rng(DeriveSeed(seed, {1}));
  train::ActOptions opt;
  opt.mode = ModeFor(policy);
  opt.deterministic = cfg.deterministic;
  opt.sample_base = !cfg.deterministic;
  opt.values = false;
  opt.force_zero_delta = cfg.force_zero_delta;

  const motion::KeyframePlan& plan = ds.plan();
  MetricAccumulator acc(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (plan.key_phases[i] <= 0.0) acc.SkipKeyframe(i);
  const auto [flight_lo, flight_hi] = FlightWindow(plan);
  EpisodeReport rep;
  EpisodeTrace trace;
  const double threshold = SuccessThreshold(morph, cfg);
  std::string termination = "alive";
  const int max_ticks = static_cast<int>(std::ceil(4.0 / env.dphi_base())) + static_cast<int>(plan.size()) + 8;
  for (int t = 0; t < max_ticks; ++t) {
    const double phi0 = env.phi();
    const train::ActOutput a = train::Act(policy, env.Observation(), env.CriticObservation(), rng, opt);
    const train::StepResult r = env.Step(a.action, a.dphi);
    acc.AddTick(r.local_error, r.joint_acc);
    if (r.key) acc.AddKeyframe(*r.key, r.key_error);
    if (phi0 >= flight_lo && phi0 < flight_hi) acc.AddFlightInterval(a.dphi);
    if (cfg.record_traces) {
      trace.phi.push_back(phi0);
      trace.dphi.push_back(a.dphi);
      trace.delta_action_norm.push_back(opt.mode == train::PolicyMode::kAdapters
                                            ? (a.action - a.base_action.cwiseMax(-policy.action_clip)
                                                              .cwiseMin(policy.action_clip))
                                                  .norm()
                                            : 0.0);
    }
    if (r.done) {
      termination = sim::TerminationName(r.termination);
      if (r.diverged) termination = "diverged";
      break;
    }
  }
  rep = acc.Finish(threshold, termination);
  rep.psi = psi;
  rep.seed = seed;
  rep.trace = std::move(trace);
  return rep;
}

// Kinematic replay of the edited target (no dynamics): the metric pipeline
// applied to a perfect tracker.
inline EpisodeReport ReplayReference(const motion::EditedDataset& ds, const sim::Morphology& morph, double psi,
                                     double dphi, double threshold) {
  Require(dphi > 0.0, ErrorCode::kInvalidArgument, "phase interval must be positive");
  const motion::EditedMotion edited = ds.Edit(psi);
  const motion::KeyframePlan& plan = ds.plan();
  MetricAccumulator acc(plan.size());
  std::vector<std::uint8_t> fired(plan.size(), 0);
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (plan.key_phases[i] <= 0.0) {
      acc.SkipKeyframe(i);
      fired[i] = 1;
    }
  double phi = 0.0;
  VecX prev_vel = ds.base().Sample(0.0).joint_velocities;
  int ticks = 0;
  while (phi < 1.0) {
    double next = std::min(phi + dphi, 1.0);
    std::optional<std::size_t> key;
    for (std::size_t i = 0; i < plan.size(); ++i)
      if (!fired[i] && plan.key_phases[i] > phi && plan.key_phases[i] <= next + 1e-9) {
        next = plan.key_phases[i];
        key = i;
        fired[i] = 1;
        break;
      }
    const motion::Frame local = ds.base().Sample(next);
    VecX q = local.q();
    q.head(2) += ds.OffsetAt(edited, next);
    if (key) q = edited.keyframes[*key].q();
    const sim::BodyPoses sim_poses = sim::ForwardKinematics(morph, q);
    const sim::BodyPoses ref_poses = sim::ForwardKinematics(morph, local.q());
    const double local_err = sim::MeanBodyDistance(sim::ToRootFrame(sim_poses, sim_poses.com),
                                                   sim::ToRootFrame(ref_poses, ref_poses.com));
    const double dt = (next - phi) * ds.base().duration_s();
    acc.AddTick(local_err, (local.joint_velocities - prev_vel) / dt);
    if (key) {
      const sim::BodyPoses target = sim::ForwardKinematics(morph, edited.keyframes[*key].q());
      acc.AddKeyframe(*key, sim::MeanBodyDistance(sim_poses.com, target.com));
    }
    prev_vel = local.joint_velocities;
    phi = next;
    ++ticks;
  }
  EpisodeReport r = acc.Finish(threshold, "complete");
  r.psi = psi;
  return r;
}

// Aggregates over evaluation seeds: each seed contributes its per-band
// mean; the reported std is across those per-seed means.
struct BandSummary {
  Stat success, e_g_mm, e_l_mm, e_smth;
  int episodes = 0;
};

struct SweepReport {
  std::vector<EpisodeReport> episodes;  // ordered by seed, psi point, repeat
  std::vector<std::uint64_t> seeds;
  BandSummary easy, hard, overall;

  const BandSummary& band(const std::string& name) const {
    if (name == "easy") return easy;
    if (name == "hard") return hard;
    return overall;
  }
};

inline BandSummary Summarize(const std::vector<EpisodeReport>& eps, const std::vector<std::uint64_t>& seeds,
                             const std::string& band) {
  BandSummary s;
  std::vector<double> succ, eg, el, sm;
  for (std::uint64_t seed : seeds) {
    std::vector<double> a, b, c, d;
    for (const EpisodeReport& e : eps) {
      if (e.seed_group != seed || (band != "overall" && e.band != band)) continue;
      a.push_back(e.success ? 1.0 : 0.0);
      b.push_back(e.e_g_bpe_sparse_mm);
      c.push_back(e.e_l_bpe_dense_mm);
      d.push_back(e.e_smth_dense);
      ++s.episodes;
    }
    if (a.empty()) continue;
    succ.push_back(MeanStd(a).mean);
    eg.push_back(MeanStd(b).mean);
    el.push_back(MeanStd(c).mean);
    sm.push_back(MeanStd(d).mean);
  }
  s.success = MeanStd(succ);
  s.e_g_mm = MeanStd(eg);
  s.e_l_mm = MeanStd(el);
  s.e_smth = MeanStd(sm);
  return s;
}

inline std::uint64_t EpisodeSeed(std::uint64_t seed, std::size_t point, int repeat) {
  return DeriveSeed(seed, {0xE7A1ull, static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(repeat)});
}

// Runs every (seed, psi, repeat) episode, in parallel across workers, and
// aggregates in a fixed order.
inline SweepReport EvaluatePolicy(const train::PolicyBundle& policy, const motion::EditedDataset& ds,
                                  const sim::Morphology& morph, const train::EnvConfig& env_cfg,
                                  const EvalConfig& cfg, const std::vector<PsiPoint>& points,
                                  const std::vector<std::uint64_t>& seeds) {
  cfg.Validate();
  Require(!points.empty() && !seeds.empty(), ErrorCode::kInvalidArgument, "evaluation needs psi points and seeds");
  struct Job {
    std::uint64_t seed;
    std::size_t point;
    int repeat;
  };
  std::vector<Job> jobs;
  for (std::uint64_t s : seeds)
    for (std::size_t p = 0; p < points.size(); ++p)
      for (int k = 0; k < cfg.episodes_per_psi; ++k) jobs.push_back({s, p, k});
  SweepReport rep;
  rep.seeds = seeds;
  rep.episodes.resize(jobs.size());
  const int n = static_cast<int>(jobs.size());
  const int w = std::max(1, std::min(cfg.workers, n));
  std::vector<std::exception_ptr> errors(w);
  auto run = [&](int worker) {
    try {
      for (int j = worker; j < n; j += w) {
        const Job& job = jobs[j];
        EpisodeReport e = RunEpisode(policy, ds, morph, env_cfg, cfg, points[job.point].psi,
                                     EpisodeSeed(job.seed, job.point, job.repeat));
        e.band = points[job.point].band;
        e.seed_group = job.seed;
        rep.episodes[j] = std::move(e);
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (w == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < w; ++i) threads.emplace_back(run, i);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  rep.easy = Summarize(rep.episodes, seeds, "easy");
  rep.hard = Summarize(rep.episodes, seeds, "hard");
  rep.overall = Summarize(rep.episodes, seeds, "overall");
  return rep;
}

// Mean commanded phase interval over the flight window, across episodes.
inline double MeanFlightInterval(const train::PolicyBundle& policy, const motion::EditedDataset& ds,
                                 const sim::Morphology& morph, const train::EnvConfig& env_cfg,
                                 const EvalConfig& cfg, double psi, int episodes, std::uint64_t seed) {
  std::vector<double> v;
  for (int k = 0; k < episodes; ++k)
    v.push_back(RunEpisode(policy, ds, morph, env_cfg, cfg, psi, EpisodeSeed(seed, 0, k)).mean_flight_dphi);
  return MeanStd(v).mean;
}

}  // namespace keytrack::eval

#endif  // KEYTRACK_EVAL_EVALUATE_HPP_
