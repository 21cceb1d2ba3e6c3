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

#ifndef KEYTRACK_TRAINER_TRAINER_HPP_
#define KEYTRACK_TRAINER_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/log.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/nets/adam.hpp"
#include "keytrack/trainer/config.hpp"
#include "keytrack/trainer/env.hpp"
#include "keytrack/trainer/gae.hpp"
#include "keytrack/trainer/policy.hpp"
#include "keytrack/trainer/ppo.hpp"

namespace keytrack::train {

// Per-tick records of a collection phase, [n_envs x n_steps] flattened
// env-major (column e * n_steps + t). Rewards are stored unweighted.
struct RolloutBuffer {
  int n_envs = 0;
  int n_steps = 0;
  MatX obs, critic_obs, raw_obs, raw_critic_obs;
  MatX base_action, track_in, track_out;
  VecX base_logp, raw_phase, phase_logp, track_logp;
  VecX r_sparse, r_dense, phi, psi;
  std::vector<std::uint8_t> done;
  VecX v_sparse, v_dense, vp_sparse, vp_dense, vt_sparse, vt_dense;
  // Values of the state following the last tick of each env (0 if done).
  VecX boot_sparse, boot_dense, boot_p_sparse, boot_p_dense, boot_t_sparse, boot_t_dense;

  int size() const { return n_envs * n_steps; }
  int col(int env, int t) const { return env * n_steps + t; }

  void Allocate(int envs, int steps, int obs_dim, int critic_dim, int act_dim) {
    n_envs = envs;
    n_steps = steps;
    const int n = envs * steps;
    obs = MatX::Zero(obs_dim, n);
    critic_obs = MatX::Zero(critic_dim, n);
    raw_obs = MatX::Zero(obs_dim, n);
    raw_critic_obs = MatX::Zero(critic_dim, n);
    base_action = MatX::Zero(act_dim, n);
    track_in = MatX::Zero(obs_dim + 1, n);
    track_out = MatX::Zero(act_dim, n);
    for (VecX* v : {&base_logp, &raw_phase, &phase_logp, &track_logp, &r_sparse, &r_dense, &phi, &psi, &v_sparse,
                    &v_dense, &vp_sparse, &vp_dense, &vt_sparse, &vt_dense})
      *v = VecX::Zero(n);
    for (VecX* v : {&boot_sparse, &boot_dense, &boot_p_sparse, &boot_p_dense, &boot_t_sparse, &boot_t_dense})
      *v = VecX::Zero(envs);
    done.assign(n, 0);
  }
};

struct EpisodeStat {
  double return_sparse = 0.0;
  double return_dense = 0.0;
  int length = 0;
  bool success = false;  // reached the end of the motion without failing
};

// Runs a fixed set of environments; env e is always stepped by exactly one
// worker, with its own policy-noise stream, so results do not depend on
// the worker count.
class Collector {
 public:
  Collector(const motion::EditedDataset& ds, const sim::Morphology& morph, const EnvConfig& cfg, int n_envs,
            std::uint64_t seed, std::uint64_t stage_tag) {
    for (int e = 0; e < n_envs; ++e) {
      envs_.emplace_back(&ds, &morph, cfg, DeriveSeed(seed, {stage_tag, static_cast<std::uint64_t>(e), 0}));
      policy_rngs_.emplace_back(DeriveSeed(seed, {stage_tag, static_cast<std::uint64_t>(e), 1}));
    }
    acc_.resize(n_envs);
    for (auto& env : envs_) env.Reset();
  }

  std::vector<TrackingEnv>& envs() { return envs_; }
  int obs_dim() const { return envs_.front().obs_dim(); }
  int critic_obs_dim() const { return envs_.front().critic_obs_dim(); }
  int act_dim() const { return envs_.front().act_dim(); }
  double dphi_base() const { return envs_.front().dphi_base(); }
  const ObservationLayout& layout() const { return envs_.front().layout(); }
  void SetRelaxed(bool r) {
    for (auto& e : envs_) e.set_relaxed(r);
  }

  RolloutBuffer Collect(const PolicyBundle& policy, const ActOptions& opt, int n_steps, int workers,
                        std::vector<EpisodeStat>* finished) {
    RolloutBuffer buf;
    const int n = static_cast<int>(envs_.size());
    buf.Allocate(n, n_steps, obs_dim(), critic_obs_dim(), act_dim());
    std::vector<std::vector<EpisodeStat>> per_env(n);
    const int w = std::max(1, std::min(workers, n));
    std::vector<std::exception_ptr> errors(w);
    auto run = [&](int worker) {
      try {
        const int lo = worker * n / w, hi = (worker + 1) * n / w;
        for (int e = lo; e < hi; ++e) RunEnv(e, policy, opt, buf, per_env[e]);
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
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
    if (finished != nullptr)
      for (auto& v : per_env) finished->insert(finished->end(), v.begin(), v.end());
    return buf;
  }

 private:
  void RunEnv(int e, const PolicyBundle& policy, const ActOptions& opt, RolloutBuffer& buf,
              std::vector<EpisodeStat>& finished) {
    TrackingEnv& env = envs_[e];
    Rng& rng = policy_rngs_[e];
    for (int t = 0; t < buf.n_steps; ++t) {
      const int c = buf.col(e, t);
      const VecX raw = env.Observation();
      const VecX craw = env.CriticObservation();
      const ActOutput a = Act(policy, raw, craw, rng, opt);
      buf.raw_obs.col(c) = raw;
      buf.raw_critic_obs.col(c) = craw;
      buf.obs.col(c) = a.obs;
      buf.critic_obs.col(c) = a.critic_obs;
      buf.base_action.col(c) = a.base_action;
      buf.base_logp[c] = a.base_logp;
      buf.raw_phase[c] = a.raw_phase;
      buf.phase_logp[c] = a.phase_logp;
      if (opt.mode == PolicyMode::kAdapters) {
        buf.track_in.col(c) = a.track_in;
        buf.track_out.col(c) = a.track_out;
        buf.track_logp[c] = a.track_logp;
      }
      buf.v_sparse[c] = a.v_sparse;
      buf.v_dense[c] = a.v_dense;
      buf.vp_sparse[c] = a.vp_sparse;
      buf.vp_dense[c] = a.vp_dense;
      buf.vt_sparse[c] = a.vt_sparse;
      buf.vt_dense[c] = a.vt_dense;
      buf.phi[c] = env.phi();
      buf.psi[c] = env.psi();
      const StepResult r = env.Step(a.action, a.dphi);
      buf.r_sparse[c] = r.reward.sparse;
      buf.r_dense[c] = r.reward.dense;
      buf.done[c] = r.done ? 1 : 0;
      EpisodeStat& acc = acc_[e];
      acc.return_sparse += r.reward.sparse;
      acc.return_dense += r.reward.dense;
      ++acc.length;
      if (r.done) {
        acc.success = !r.failure;
        finished.push_back(acc);
        acc = EpisodeStat{};
        env.Reset();
      }
    }
    const int last = buf.col(e, buf.n_steps - 1);
    if (!buf.done[last]) {
      ActOptions vopt = opt;
      vopt.deterministic = true;
      const ActOutput a = Act(policy, env.Observation(), env.CriticObservation(), rng, vopt);
      buf.boot_sparse[e] = a.v_sparse;
      buf.boot_dense[e] = a.v_dense;
      buf.boot_p_sparse[e] = a.vp_sparse;
      buf.boot_p_dense[e] = a.vp_dense;
      buf.boot_t_sparse[e] = a.vt_sparse;
      buf.boot_t_dense[e] = a.vt_dense;
    }
  }

  std::vector<TrackingEnv> envs_;
  std::vector<Rng> policy_rngs_;
  std::vector<EpisodeStat> acc_;
};

// GAE for one reward group over a whole buffer.
inline GaeResult BufferGae(const RolloutBuffer& b, const VecX& rewards, const VecX& values, const VecX& boot,
                           double gamma, double lambda) {
  GaeResult out;
  out.advantages.resize(b.size());
  out.returns.resize(b.size());
  for (int e = 0; e < b.n_envs; ++e) {
    std::vector<double> r(b.n_steps), v(b.n_steps), nv(b.n_steps);
    std::vector<std::uint8_t> d(b.n_steps);
    for (int t = 0; t < b.n_steps; ++t) {
      const int c = b.col(e, t);
      r[t] = rewards[c];
      v[t] = values[c];
      d[t] = b.done[c];
      nv[t] = d[t] ? 0.0 : (t + 1 < b.n_steps ? values[b.col(e, t + 1)] : boot[e]);
    }
    const GaeResult g = ComputeGae(r, v, nv, d, gamma, lambda);
    for (int t = 0; t < b.n_steps; ++t) {
      out.advantages[b.col(e, t)] = g.advantages[t];
      out.returns[b.col(e, t)] = g.returns[t];
    }
  }
  return out;
}

inline VecX ToVec(const std::vector<double>& v) { return Eigen::Map<const VecX>(v.data(), v.size()); }

struct Optimizers {
  nets::Adam actor, critic_sparse, critic_dense, phase, track, pc_sparse, pc_dense, tc_sparse, tc_dense;

  static Optimizers For(const PolicyBundle& b) {
    Optimizers o;
    o.actor = nets::Adam(b.actor.num_params());
    o.critic_sparse = nets::Adam(b.critic.sparse.num_params());
    o.critic_dense = nets::Adam(b.critic.dense.num_params());
    if (b.has_phase) o.phase = nets::Adam(b.phase.num_params());
    if (b.has_track) {
      o.track = nets::Adam(b.track.num_params());
      o.pc_sparse = nets::Adam(b.phase_critic.sparse.num_params());
      o.pc_dense = nets::Adam(b.phase_critic.dense.num_params());
      o.tc_sparse = nets::Adam(b.track_critic.sparse.num_params());
      o.tc_dense = nets::Adam(b.track_critic.dense.num_params());
    }
    return o;
  }
};

struct UpdateStats {
  double kl = 0.0;
  double clip_frac = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double lr = 0.0;
  int skipped = 0;  // minibatches dropped for non-finite losses
};

// One head trained by PPO on a given advantage stream.
struct HeadTask {
  nets::GaussianHead* head;
  nets::Adam* opt;
  const MatX* inputs;
  MatX actions;
  VecX old_logp;
  const VecX* adv;
  MatX old_mean;
  VecX old_log_std;
  bool lipschitz = false;
};

struct CriticTask {
  nets::Mlp* net;
  nets::Adam* opt;
  VecX targets;
};

// PPO update over the buffer for the heads selected by `mode`; critics
// regress onto their own group returns.
inline UpdateStats PpoUpdate(PolicyBundle& b, Optimizers& opts, const RolloutBuffer& buf, PolicyMode mode,
                             bool update_base, const PpoConfig& cfg, double& lr, Rng& rng) {
  const PpoConfig& p = cfg;
  std::vector<HeadTask> heads;
  std::vector<CriticTask> critics;
  auto group = [&](const VecX& vs, const VecX& vd, const VecX& bs, const VecX& bd, VecX& adv, VecX& ret_s,
                   VecX& ret_d) {
    const GaeResult gs = BufferGae(buf, buf.r_sparse, vs, bs, p.gamma_sparse, p.lambda);
    const GaeResult gd = BufferGae(buf, buf.r_dense, vd, bd, p.gamma_dense, p.lambda);
    adv = AggregateAdvantages(ToVec(gs.advantages), ToVec(gd.advantages), p.w_sparse, p.w_dense);
    ret_s = ToVec(gs.returns);
    ret_d = ToVec(gd.returns);
  };
  VecX adv_base, adv_phase, adv_track, rs, rd, prs, prd, trs, trd;
  const MatX raw_phase = buf.raw_phase.transpose();
  auto add_head = [&](nets::GaussianHead& h, nets::Adam& o, const MatX& in, const MatX& act, const VecX& logp,
                      const VecX& adv, bool lip) {
    HeadTask t{&h, &o, &in, act, logp, &adv, h.Mean(in), h.log_std(), lip};
    heads.push_back(std::move(t));
  };
  if (mode == PolicyMode::kAdapters) {
    group(buf.vp_sparse, buf.vp_dense, buf.boot_p_sparse, buf.boot_p_dense, adv_phase, prs, prd);
    group(buf.vt_sparse, buf.vt_dense, buf.boot_t_sparse, buf.boot_t_dense, adv_track, trs, trd);
    add_head(b.phase, opts.phase, buf.obs, raw_phase, buf.phase_logp, adv_phase, false);
    add_head(b.track, opts.track, buf.track_in, buf.track_out, buf.track_logp, adv_track, false);
    if (update_base) add_head(b.actor, opts.actor, buf.obs, buf.base_action, buf.base_logp, adv_track, false);
    critics.push_back({&b.phase_critic.sparse, &opts.pc_sparse, prs});
    critics.push_back({&b.phase_critic.dense, &opts.pc_dense, prd});
    critics.push_back({&b.track_critic.sparse, &opts.tc_sparse, trs});
    critics.push_back({&b.track_critic.dense, &opts.tc_dense, trd});
  } else {
    group(buf.v_sparse, buf.v_dense, buf.boot_sparse, buf.boot_dense, adv_base, rs, rd);
    add_head(b.actor, opts.actor, buf.obs, buf.base_action, buf.base_logp, adv_base, p.lipschitz_coef > 0.0);
    if (mode == PolicyMode::kBaseAdaptivePhase)
      add_head(b.phase, opts.phase, buf.obs, raw_phase, buf.phase_logp, adv_base, false);
    critics.push_back({&b.critic.sparse, &opts.critic_sparse, rs});
    critics.push_back({&b.critic.dense, &opts.critic_dense, rd});
  }

  UpdateStats st;
  int counted = 0;
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    double epoch_kl = 0.0;
    int epoch_mb = 0;
    for (const std::vector<int>& idx : Minibatches(buf.size(), p.minibatches, rng)) {
      if (idx.empty()) continue;
      std::vector<PolicyLoss> losses;
      bool finite = true;
      double kl = 0.0;
      for (HeadTask& h : heads) {
        const MatX in = Columns(*h.inputs, idx);
        PolicyLoss l = ClippedSurrogate(*h.head, in, Columns(h.actions, idx), Entries(h.old_logp, idx),
                                        Entries(*h.adv, idx), Columns(h.old_mean, idx), h.old_log_std, p.clip,
                                        p.entropy_coef);
        if (h.lipschitz) {
          MatX noise(in.rows(), in.cols());
          for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = p.lipschitz_sigma * StandardNormal(rng);
          l.loss += LipschitzPenalty(*h.head, in, noise, p.lipschitz_coef, l.grad);
        }
        finite = finite && std::isfinite(l.loss) && l.grad.allFinite();
        kl += l.kl;
        losses.push_back(std::move(l));
      }
      std::vector<ValueLoss> vlosses;
      const MatX cin = Columns(buf.critic_obs, idx);
      for (CriticTask& c : critics) {
        ValueLoss v = ValueRegression(*c.net, cin, Entries(c.targets, idx), p.value_coef);
        finite = finite && std::isfinite(v.loss) && v.grad.allFinite();
        vlosses.push_back(std::move(v));
      }
      if (!finite) {
        ++st.skipped;
        lr = std::max(p.lr_min, 0.5 * lr);
        Log(LogLevel::kWarning, "non-finite loss: minibatch skipped, learning rate halved");
        continue;
      }
      for (std::size_t i = 0; i < heads.size(); ++i) {
        ApplyHead(*heads[i].head, *heads[i].opt, losses[i].grad, lr, p.max_grad_norm);
        st.policy_loss += losses[i].loss;
        st.clip_frac += losses[i].clip_frac / heads.size();
      }
      for (std::size_t i = 0; i < critics.size(); ++i) {
        ApplyMlp(*critics[i].net, *critics[i].opt, vlosses[i].grad, lr, p.max_grad_norm);
        st.value_loss += vlosses[i].loss;
      }
      epoch_kl += kl;
      ++epoch_mb;
      ++counted;
    }
    if (epoch_mb > 0) {
      st.kl = epoch_kl / epoch_mb;
      lr = AdaptLearningRate(lr, st.kl, p.desired_kl, p.lr_min, p.lr_max);
    }
  }
  if (counted > 0) {
    st.policy_loss /= counted;
    st.value_loss /= counted;
    st.clip_frac /= counted;
  }
  st.lr = lr;
  return st;
}

struct IterationMetrics {
  int iter = 0;
  double mean_return_sparse = 0.0;
  double mean_return_dense = 0.0;
  double kl = 0.0;
  double clip_frac = 0.0;
  double lr = 0.0;
  double success_rate_train = 0.0;
  double wallclock = 0.0;
  int episodes = 0;

  nlohmann::json ToJson() const {
    return {{"iter", iter},
            {"mean_return_sparse", mean_return_sparse},
            {"mean_return_dense", mean_return_dense},
            {"kl", kl},
            {"clip_frac", clip_frac},
            {"lr", lr},
            {"success_rate_train", success_rate_train},
            {"episodes", episodes},
            {"wallclock", wallclock}};
  }
};

struct LoopOptions {
  PolicyMode mode = PolicyMode::kBase;
  int iterations = 0;
  int iteration_offset = 0;  // global index of the first iteration
  bool update_normalizer = true;
  bool update_base = true;  // adapter mode: also train the tracking policy
  std::uint64_t stage_tag = 1;
  std::ostream* metrics = nullptr;  // JSONL sink
  std::function<void(const IterationMetrics&)> on_iteration;
};

// collect -> GAE -> PPO, repeated. Returns the metrics of every iteration.
// On divergence the bundle is restored to the last finite parameters and a
// runtime error is raised.
inline std::vector<IterationMetrics> RunTraining(PolicyBundle& bundle, const motion::EditedDataset& ds,
                                                 const sim::Morphology& morph, const EnvConfig& env_cfg,
                                                 const TrainConfig& cfg, const LoopOptions& loop) {
  cfg.Validate();
  Collector collector(ds, morph, env_cfg, cfg.n_envs, cfg.seed, loop.stage_tag);
  Optimizers opts = Optimizers::For(bundle);
  Rng update_rng(DeriveSeed(cfg.seed, {loop.stage_tag, 0xC0FFEEull}));
  double lr = cfg.ppo.lr;
  ActOptions act;
  act.mode = loop.mode;
  act.sample_base = loop.mode == PolicyMode::kAdapters && loop.update_base;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<IterationMetrics> history;
  double last_sparse = 0.0, last_dense = 0.0;
  PolicyBundle last_good = bundle;
  for (int it = 0; it < loop.iterations; ++it) {
    const int global_iter = loop.iteration_offset + it;
    collector.SetRelaxed(global_iter >= cfg.relax_after);
    std::vector<EpisodeStat> finished;
    RolloutBuffer buf = collector.Collect(bundle, act, cfg.n_steps, cfg.workers, &finished);
    if (loop.update_normalizer) {
      bundle.actor_norm.Update(buf.raw_obs);
      bundle.critic_norm.Update(buf.raw_critic_obs);
    }
    const UpdateStats st = PpoUpdate(bundle, opts, buf, loop.mode, loop.update_base, cfg.ppo, lr, update_rng);
    IterationMetrics m;
    m.iter = global_iter;
    m.episodes = static_cast<int>(finished.size());
    if (!finished.empty()) {
      double s = 0.0, d = 0.0, ok = 0.0;
      for (const EpisodeStat& e : finished) {
        s += e.return_sparse;
        d += e.return_dense;
        ok += e.success ? 1.0 : 0.0;
      }
      last_sparse = s / finished.size();
      last_dense = d / finished.size();
      m.success_rate_train = ok / finished.size();
    }
    m.mean_return_sparse = last_sparse;
    m.mean_return_dense = last_dense;
    m.kl = st.kl;
    m.clip_frac = st.clip_frac;
    m.lr = st.lr;
    m.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool finite_params = bundle.actor.GetFlat().allFinite() && bundle.critic.sparse.params().allFinite() &&
                               bundle.critic.dense.params().allFinite() &&
                               (!bundle.has_phase || bundle.phase.GetFlat().allFinite()) &&
                               (!bundle.has_track || bundle.track.GetFlat().allFinite());
    if (!std::isfinite(m.mean_return_sparse) || !std::isfinite(m.mean_return_dense) || !finite_params) {
      bundle = last_good;
      Fail(ErrorCode::kSimulationDiverged, "training diverged at iteration " + std::to_string(global_iter) +
                                               "; parameters restored to the last finite iteration");
    }
    last_good = bundle;
    if (loop.metrics != nullptr) *loop.metrics << m.ToJson().dump() << "\n" << std::flush;
    if (loop.on_iteration) loop.on_iteration(m);
    history.push_back(m);
  }
  return history;
}

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_TRAINER_HPP_
