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

#ifndef KEYTRACK_TRAINER_POLICY_HPP_
#define KEYTRACK_TRAINER_POLICY_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "keytrack/adapters/adapters.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"
#include "keytrack/nets/checkpoint.hpp"
#include "keytrack/nets/gaussian.hpp"
#include "keytrack/nets/mlp.hpp"
#include "keytrack/nets/normalizer.hpp"
#include "keytrack/trainer/config.hpp"
#include "keytrack/trainer/env.hpp"

namespace keytrack::train {

inline std::vector<int> LayerSizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s = {in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

// Zeroes the output layer so the network starts at exactly zero output.
inline void ZeroOutputLayer(nets::Mlp& m) {
  VecX& p = m.mutable_params();
  const int l = m.num_layers() - 1;
  p.segment(m.weight_offset(l), m.sizes()[l] * m.sizes()[l + 1]).setZero();
  p.segment(m.bias_offset(l), m.sizes()[l + 1]).setZero();
}

// A (sparse, dense) pair of value functions.
struct DoubleCritic {
  nets::Mlp sparse;
  nets::Mlp dense;
};

inline DoubleCritic MakeDoubleCritic(int in, const std::vector<int>& hidden, Rng& rng) {
  DoubleCritic c{nets::Mlp(LayerSizes(in, hidden, 1)), nets::Mlp(LayerSizes(in, hidden, 1))};
  c.sparse.Initialize(rng, 1.0, 1.0);
  c.dense.Initialize(rng, 1.0, 1.0);
  return c;
}

// Tracking policy, its double critic, observation statistics, and the
// optional phase/tracking adapters with their own double critics.
struct PolicyBundle {
  ObservationLayout layout;
  double dphi_base = 0.01;
  double action_clip = 4.0;
  adapters::PhaseBounds bounds;
  nets::Normalizer actor_norm;
  nets::Normalizer critic_norm;
  nets::GaussianHead actor;
  DoubleCritic critic;

  bool has_phase = false;
  bool has_track = false;
  nets::GaussianHead phase;  // raw (pre-squash) phase-interval delta
  nets::GaussianHead track;  // compensation in units of dphi_base
  DoubleCritic phase_critic;
  DoubleCritic track_critic;
  std::string base_hash;  // hash of the frozen base when adapters exist

  int act_dim() const { return actor.act_dim(); }
  // Compensation a_delta = track_output / dphi_base, so that
  // dphi_delta * a_delta stays O(1) in action units.
  double track_scale() const { return 1.0 / dphi_base; }
};

inline PolicyBundle MakeBasePolicy(const ObservationLayout& layout, double dphi_base, double action_clip,
                                   const TrainConfig& cfg, Rng& rng) {
  PolicyBundle b;
  b.layout = layout;
  b.dphi_base = dphi_base;
  b.action_clip = action_clip;
  b.bounds = cfg.phase_bounds;
  b.actor_norm = nets::Normalizer(layout.actor_dim());
  b.critic_norm = nets::Normalizer(layout.critic_dim());
  b.actor = nets::GaussianHead(LayerSizes(layout.actor_dim(), cfg.actor_hidden, layout.num_joints), cfg.init_log_std);
  b.actor.mlp().Initialize(rng, 1.0, 0.01);
  b.critic = MakeDoubleCritic(layout.critic_dim(), cfg.critic_hidden, rng);
  return b;
}

// Phase head with a zero output layer: starts at the base interval.
inline void AddPhaseHead(PolicyBundle& b, const TrainConfig& cfg, Rng& rng, bool with_critic) {
  b.phase = nets::GaussianHead(LayerSizes(b.layout.actor_dim(), cfg.adapter_hidden, 1), cfg.adapter_init_log_std);
  b.phase.mlp().Initialize(rng, 1.0, 1.0);
  ZeroOutputLayer(b.phase.mlp());
  b.has_phase = true;
  if (with_critic) b.phase_critic = MakeDoubleCritic(b.layout.critic_dim(), cfg.critic_hidden, rng);
}

inline void AddTrackHead(PolicyBundle& b, const TrainConfig& cfg, Rng& rng) {
  b.track = nets::GaussianHead(LayerSizes(b.layout.actor_dim() + 1, cfg.adapter_hidden, b.layout.num_joints),
                               cfg.adapter_init_log_std);
  b.track.mlp().Initialize(rng, 1.0, 1.0);
  ZeroOutputLayer(b.track.mlp());
  b.has_track = true;
  b.track_critic = MakeDoubleCritic(b.layout.critic_dim(), cfg.critic_hidden, rng);
}

// Everything computed for one observation.
struct ActOutput {
  VecX obs;  // normalized actor observation
  VecX critic_obs;  // normalized critic observation
  VecX base_action;  // sampled or mean tracking action
  double base_logp = 0.0;
  double raw_phase = 0.0;
  double phase_logp = 0.0;
  adapters::PhaseAdaptation phase;
  VecX track_in;
  VecX track_out;
  double track_logp = 0.0;
  VecX action;  // executed action
  double dphi = 0.0;  // executed phase interval
  double v_sparse = 0.0, v_dense = 0.0;
  double vp_sparse = 0.0, vp_dense = 0.0;
  double vt_sparse = 0.0, vt_dense = 0.0;
};

struct ActOptions {
  PolicyMode mode = PolicyMode::kBase;
  bool deterministic = false;  // means everywhere
  bool sample_base = true;  // in adapter mode: sample the base (unfrozen base)
  bool values = true;
  bool force_zero_delta = false;  // diagnostic: pin the phase delta to 0
};

inline double Value(const nets::Mlp& v, const VecX& x) { return v.Forward(x)[0]; }

inline ActOutput Act(const PolicyBundle& b, const VecX& obs_raw, const VecX& critic_raw, Rng& rng,
                     const ActOptions& opt) {
  ActOutput o;
  o.obs = b.actor_norm.Normalize(obs_raw);
  o.critic_obs = b.critic_norm.Normalize(critic_raw);
  const bool base_det = opt.deterministic || (opt.mode == PolicyMode::kAdapters && !opt.sample_base);
  const nets::ActionSample base = b.actor.Sample(o.obs, rng, base_det);
  o.base_action = base.action;
  o.base_logp = base.log_prob;
  o.action = base.action.cwiseMax(-b.action_clip).cwiseMin(b.action_clip);
  o.dphi = b.dphi_base;
  if (opt.mode != PolicyMode::kBase) {
    Require(b.has_phase, ErrorCode::kInvalidArgument, "policy has no phase head");
    const nets::ActionSample u = b.phase.Sample(o.obs, rng, opt.deterministic);
    o.raw_phase = u.action[0];
    o.phase_logp = u.log_prob;
    o.phase = adapters::AdaptPhase(opt.force_zero_delta ? 0.0 : o.raw_phase, b.dphi_base, b.bounds);
    o.dphi = o.phase.dphi_ada;
  }
  if (opt.mode == PolicyMode::kAdapters) {
    Require(b.has_track, ErrorCode::kInvalidArgument, "policy has no tracking adapter");
    o.track_in = adapters::TrackAdapterInput(o.obs, o.phase.dphi_ada, b.dphi_base);
    const nets::ActionSample t = b.track.Sample(o.track_in, rng, opt.deterministic);
    o.track_out = t.action;
    o.track_logp = t.log_prob;
    o.action = adapters::AdaptAction(o.base_action, o.phase.dphi_delta, t.action * b.track_scale(), b.action_clip);
  }
  if (opt.values) {
    o.v_sparse = Value(b.critic.sparse, o.critic_obs);
    o.v_dense = Value(b.critic.dense, o.critic_obs);
    if (opt.mode == PolicyMode::kAdapters) {
      o.vp_sparse = Value(b.phase_critic.sparse, o.critic_obs);
      o.vp_dense = Value(b.phase_critic.dense, o.critic_obs);
      o.vt_sparse = Value(b.track_critic.sparse, o.critic_obs);
      o.vt_dense = Value(b.track_critic.dense, o.critic_obs);
    }
  }
  return o;
}

// ---- checkpoint mapping ----------------------------------------------------

inline void PutHead(nets::Checkpoint& c, const std::string& name, const nets::GaussianHead& h) {
  c.tensors[name + "/params"] = h.mlp().params();
  c.tensors[name + "/log_std"] = h.log_std();
}

inline void PutNormalizer(nets::Checkpoint& c, const std::string& name, const nets::Normalizer& n) {
  c.tensors[name + "/mean"] = n.mean();
  c.tensors[name + "/var"] = n.var();
  c.tensors[name + "/count"] = VecX::Constant(1, n.count());
}

inline nlohmann::json Architecture(const PolicyBundle& b) {
  nlohmann::json j;
  j["num_joints"] = b.layout.num_joints;
  j["history"] = b.layout.history;
  j["dphi_base"] = b.dphi_base;
  j["action_clip"] = b.action_clip;
  j["phase_lower"] = b.bounds.lower;
  j["phase_upper"] = b.bounds.upper;
  j["actor"] = b.actor.mlp().sizes();
  j["critic"] = b.critic.sparse.sizes();
  j["has_phase"] = b.has_phase;
  j["has_track"] = b.has_track;
  if (b.has_phase) j["phase"] = b.phase.mlp().sizes();
  if (b.has_track) j["track"] = b.track.mlp().sizes();
  j["phase_critic"] = b.has_track;
  return j;
}

// Tensors under "base/" form the frozen part in stage 2.
inline nets::Checkpoint ToCheckpoint(const PolicyBundle& b, const std::string& config_hash,
                                     const std::string& config_json) {
  nets::Checkpoint c;
  c.config_hash = config_hash;
  c.config_json = config_json;
  c.meta["architecture"] = Architecture(b).dump();
  PutHead(c, "base/actor", b.actor);
  c.tensors["base/critic_sparse"] = b.critic.sparse.params();
  c.tensors["base/critic_dense"] = b.critic.dense.params();
  PutNormalizer(c, "base/norm_actor", b.actor_norm);
  PutNormalizer(c, "base/norm_critic", b.critic_norm);
  if (b.has_phase) PutHead(c, "adapter/phase", b.phase);
  if (b.has_track) {
    PutHead(c, "adapter/track", b.track);
    c.tensors["adapter/phase_critic_sparse"] = b.phase_critic.sparse.params();
    c.tensors["adapter/phase_critic_dense"] = b.phase_critic.dense.params();
    c.tensors["adapter/track_critic_sparse"] = b.track_critic.sparse.params();
    c.tensors["adapter/track_critic_dense"] = b.track_critic.dense.params();
  }
  // Adapter checkpoints record the base they were trained on; tracking-only
  // checkpoints record their own base so corruption is caught on load.
  c.meta["base_hash"] = b.has_track ? b.base_hash : c.TensorHash("base/");
  return c;
}

// Hash identifying the tracking policy, its critics, and normalization.
inline std::string BaseHash(const PolicyBundle& b) { return ToCheckpoint(b, "", "").TensorHash("base/"); }

inline nets::GaussianHead GetHead(const nets::Checkpoint& c, const std::string& name, const std::vector<int>& sizes,
                                  double output_scale = 1.0) {
  nets::GaussianHead h(sizes, 0.0, output_scale);
  h.mlp().set_params(c.Get(name + "/params"));
  h.set_log_std(c.Get(name + "/log_std"));
  return h;
}

inline nets::Mlp GetMlp(const nets::Checkpoint& c, const std::string& name, const std::vector<int>& sizes) {
  nets::Mlp m(sizes);
  m.set_params(c.Get(name));
  return m;
}

inline nets::Normalizer GetNormalizer(const nets::Checkpoint& c, const std::string& name, int dim) {
  nets::Normalizer n(dim);
  n.SetStats(c.Get(name + "/mean"), c.Get(name + "/var"), c.Get(name + "/count")[0]);
  n.Freeze();
  return n;
}

inline PolicyBundle FromCheckpoint(const nets::Checkpoint& c) {
  try {
    const nlohmann::json a = nlohmann::json::parse(c.Meta("architecture"));
    PolicyBundle b;
    b.layout.num_joints = a.at("num_joints");
    b.layout.history = a.at("history");
    b.dphi_base = a.at("dphi_base");
    b.action_clip = a.at("action_clip");
    b.bounds.lower = a.at("phase_lower");
    b.bounds.upper = a.at("phase_upper");
    const auto actor = a.at("actor").get<std::vector<int>>();
    const auto critic = a.at("critic").get<std::vector<int>>();
    b.actor_norm = GetNormalizer(c, "base/norm_actor", b.layout.actor_dim());
    b.critic_norm = GetNormalizer(c, "base/norm_critic", b.layout.critic_dim());
    b.actor = GetHead(c, "base/actor", actor);
    b.critic.sparse = GetMlp(c, "base/critic_sparse", critic);
    b.critic.dense = GetMlp(c, "base/critic_dense", critic);
    b.has_phase = a.at("has_phase");
    b.has_track = a.at("has_track");
    if (b.has_phase) b.phase = GetHead(c, "adapter/phase", a.at("phase").get<std::vector<int>>());
    if (b.has_track) {
      b.track = GetHead(c, "adapter/track", a.at("track").get<std::vector<int>>());
      b.phase_critic.sparse = GetMlp(c, "adapter/phase_critic_sparse", critic);
      b.phase_critic.dense = GetMlp(c, "adapter/phase_critic_dense", critic);
      b.track_critic.sparse = GetMlp(c, "adapter/track_critic_sparse", critic);
      b.track_critic.dense = GetMlp(c, "adapter/track_critic_dense", critic);
    }
    b.base_hash = c.Meta("base_hash");
    Require(c.TensorHash("base/") == b.base_hash, ErrorCode::kHashMismatch,
            b.has_track ? "adapter checkpoint does not match the tracking policy it was trained on"
                        : "tracking policy parameters do not match their recorded hash");
    return b;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchema, std::string("checkpoint architecture is malformed: ") + e.what());
  }
}

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_POLICY_HPP_
