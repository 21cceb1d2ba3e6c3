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

#ifndef KEYTRACK_CLI_CONFIG_HPP_
#define KEYTRACK_CLI_CONFIG_HPP_

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/hash.hpp"
#include "keytrack/eval/evaluate.hpp"
#include "keytrack/motion/editing.hpp"
#include "keytrack/sim/morphology.hpp"
#include "keytrack/trainer/config.hpp"
#include "keytrack/trainer/env.hpp"

namespace keytrack::cli {

// Everything one experiment needs. Ablations and baselines are expressed
// as field values (see MethodPreset), so a config file is the full record.
struct ExperimentConfig {
  std::string morphology = "default";  // "default" or a morphology JSON path
  motion::DatasetOptions dataset;
  train::EnvConfig env;
  train::TrainConfig train;
  eval::PsiBands bands;
  eval::EvalConfig eval;
  std::vector<std::uint64_t> eval_seeds = {1, 2, 3};
  std::uint64_t seed = 1;

  void Validate() const;
};

inline std::string ActionBaseName(train::ActionBase b) {
  return b == train::ActionBase::kReference ? "reference" : "default";
}

inline train::ActionBase ParseActionBase(const std::string& s) {
  if (s == "reference") return train::ActionBase::kReference;
  if (s == "default") return train::ActionBase::kDefault;
  Fail(ErrorCode::kConfig, "unknown action base '" + s + "' (expected reference or default)");
}

namespace detail {

using nlohmann::json;

inline json::json_pointer Pointer(const std::string& dotted) {
  std::string p = "/" + dotted;
  for (char& c : p)
    if (c == '.') c = '/';
  return json::json_pointer(p);
}

inline json Encode(double v) { return v; }
inline json Encode(int v) { return v; }
inline json Encode(bool v) { return v; }
inline json Encode(std::uint64_t v) { return v; }
inline json Encode(const std::string& v) { return v; }
inline json Encode(const std::vector<int>& v) { return v; }
inline json Encode(const std::vector<std::uint64_t>& v) { return v; }
inline json Encode(const sim::Range& r) { return json::array({r.lo, r.hi}); }
inline json Encode(const motion::EditRange& r) { return json::array({r.lo, r.hi}); }
inline json Encode(const std::vector<motion::EditRange>& v) {
  json a = json::array();
  for (const auto& r : v) a.push_back(Encode(r));
  return a;
}
inline json Encode(motion::TaskId t) { return motion::TaskName(t); }
inline json Encode(motion::DatasetMode m) { return motion::DatasetModeName(m); }
inline json Encode(train::Pipeline p) { return train::PipelineName(p); }
inline json Encode(train::ActionBase b) { return ActionBaseName(b); }

inline std::pair<double, double> DecodePair(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument("expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void Decode(const json& j, double& v) {
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  v = j.get<double>();
}
inline void Decode(const json& j, int& v) {
  if (!j.is_number_integer()) throw std::invalid_argument("expected an integer");
  v = j.get<int>();
}
inline void Decode(const json& j, bool& v) {
  if (!j.is_boolean()) throw std::invalid_argument("expected true or false");
  v = j.get<bool>();
}
inline void Decode(const json& j, std::uint64_t& v) {
  if (!j.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
  v = j.get<std::uint64_t>();
}
inline void Decode(const json& j, std::string& v) {
  if (!j.is_string()) throw std::invalid_argument("expected a string");
  v = j.get<std::string>();
}
inline void Decode(const json& j, std::vector<int>& v) {
  if (!j.is_array()) throw std::invalid_argument("expected a list of integers");
  v.clear();
  for (const json& e : j) {
    if (!e.is_number_integer()) throw std::invalid_argument("expected a list of integers");
    v.push_back(e.get<int>());
  }
}
inline void Decode(const json& j, std::vector<std::uint64_t>& v) {
  if (!j.is_array()) throw std::invalid_argument("expected a list of non-negative integers");
  v.clear();
  for (const json& e : j) {
    if (!e.is_number_unsigned()) throw std::invalid_argument("expected a list of non-negative integers");
    v.push_back(e.get<std::uint64_t>());
  }
}
inline void Decode(const json& j, sim::Range& r) { std::tie(r.lo, r.hi) = DecodePair(j); }
inline void Decode(const json& j, motion::EditRange& r) { std::tie(r.lo, r.hi) = DecodePair(j); }
inline void Decode(const json& j, std::vector<motion::EditRange>& v) {
  if (!j.is_array()) throw std::invalid_argument("expected a list of [lo, hi] ranges");
  v.clear();
  for (const json& e : j) {
    motion::EditRange r;
    Decode(e, r);
    v.push_back(r);
  }
}
template <class E, class Parse>
void DecodeEnum(const json& j, E& v, Parse parse) {
  if (!j.is_string()) throw std::invalid_argument("expected a string");
  v = parse(j.get<std::string>());
}
inline void Decode(const json& j, motion::TaskId& v) { DecodeEnum(j, v, motion::ParseTask); }
inline void Decode(const json& j, motion::DatasetMode& v) { DecodeEnum(j, v, motion::ParseDatasetMode); }
inline void Decode(const json& j, train::Pipeline& v) { DecodeEnum(j, v, train::ParsePipeline); }
inline void Decode(const json& j, train::ActionBase& v) { DecodeEnum(j, v, ParseActionBase); }

class Writer {
 public:
  template <class T>
  void operator()(const std::string& path, const T& v) {
    out[Pointer(path)] = Encode(v);
  }
  json out = json::object();
};

class Reader {
 public:
  explicit Reader(const json& in) : in_(in) {}
  template <class T>
  void operator()(const std::string& path, T& v) {
    const auto p = Pointer(path);
    if (!in_.contains(p)) return;  // keep the default
    try {
      Decode(in_.at(p), v);
    } catch (const Error& e) {
      Fail(ErrorCode::kConfig, "field '" + path + "': " + e.what());
    } catch (const std::exception& e) {
      Fail(ErrorCode::kConfig, "field '" + path + "': " + e.what());
    }
  }

 private:
  const json& in_;
};

// The single list of config fields, shared by serialization and parsing.
template <class V>
void VisitFields(V& v, ExperimentConfig& c) {
  v("seed", c.seed);
  motion::JumpParams& jp = c.dataset.params;
  v("task.id", jp.task);
  v("task.distance", jp.distance);
  v("task.apex_height", jp.apex_height);
  v("task.duration_s", jp.duration_s);
  v("task.frame_rate_hz", jp.frame_rate_hz);
  v("task.far_flight_time_s", jp.far_flight_time_s);
  v("task.stand_s", jp.stand_s);
  v("task.crouch_s", jp.crouch_s);
  v("task.push_s", jp.push_s);
  v("task.land_s", jp.land_s);
  v("task.recover_s", jp.recover_s);
  v("task.stand_height", jp.stand_height);
  v("task.crouch_height", jp.crouch_height);
  v("task.takeoff_height", jp.takeoff_height);
  v("task.tuck_height", jp.tuck_height);
  v("task.crouch_pitch", jp.crouch_pitch);
  v("task.takeoff_pitch", jp.takeoff_pitch);
  v("task.flight_pitch", jp.flight_pitch);
  v("task.land_pitch", jp.land_pitch);
  v("task.stance_ankle_x", jp.stance_ankle_x);
  v("task.edit_range", c.dataset.range);
  v("task.train_range", c.env.train_range);
  v("task.easy_band", c.bands.easy);
  v("task.hard_bands", c.bands.hard);

  v("motion.mode", c.dataset.mode);
  v("motion.uniform_keyframes", c.dataset.keyframes.n_uniform);
  v("motion.uniform_lo", c.dataset.keyframes.uniform_lo);
  v("motion.uniform_hi", c.dataset.keyframes.uniform_hi);
  v("motion.semantic_reward_scale", c.dataset.keyframes.semantic_scale);

  v("sim.morphology", c.morphology);
  v("sim.control_hz", c.env.sim.control_hz);
  v("sim.physics_hz", c.env.sim.physics_hz);
  v("sim.gravity", c.env.sim.gravity);
  v("sim.contact.stiffness", c.env.sim.contact.stiffness);
  v("sim.contact.damping", c.env.sim.contact.damping);
  v("sim.contact.tangential_stiffness", c.env.sim.contact.tangential_stiffness);
  v("sim.contact.tangential_damping", c.env.sim.contact.tangential_damping);
  sim::RandomizationConfig& r = c.env.randomization;
  v("sim.randomization.enabled", r.enabled);
  v("sim.randomization.trunk_mass_delta", r.trunk_mass_delta);
  v("sim.randomization.base_com_offset", r.base_com_offset);
  v("sim.randomization.link_mass_scale", r.link_mass_scale);
  v("sim.randomization.friction", r.friction);
  v("sim.randomization.restitution", r.restitution);
  v("sim.randomization.kp_scale", r.kp_scale);
  v("sim.randomization.kd_scale", r.kd_scale);
  v("sim.randomization.motor_strength", r.motor_strength);
  v("sim.randomization.min_delay_ticks", r.min_delay_ticks);
  v("sim.randomization.max_delay_ticks", r.max_delay_ticks);

  rewards::RewardConfig& w = c.env.reward;
  v("reward.sparse.body_pos", w.sparse.body_pos);
  v("reward.sparse.body_rot", w.sparse.body_rot);
  v("reward.sparse.feet_pos", w.sparse.feet_pos);
  v("reward.sparse.termination", w.sparse.termination);
  v("reward.dense.local_body_pos", w.dense.local_body_pos);
  v("reward.dense.local_body_rot", w.dense.local_body_rot);
  v("reward.dense.local_dof_pos", w.dense.local_dof_pos);
  v("reward.dense.feet_orientation", w.dense.feet_orientation);
  v("reward.dense.dof_acc", w.dense.dof_acc);
  v("reward.dense.dof_vel", w.dense.dof_vel);
  v("reward.dense.action_rate", w.dense.action_rate);
  v("reward.dense.smoothness", w.dense.smoothness);
  v("reward.dense.torques", w.dense.torques);
  v("reward.dense.torque_limits", w.dense.torque_limits);
  v("reward.dense.dof_pos_limits", w.dense.dof_pos_limits);
  v("reward.dense.dof_vel_limits", w.dense.dof_vel_limits);
  v("reward.sigma.body_pos", w.sigma.body_pos);
  v("reward.sigma.body_rot", w.sigma.body_rot);
  v("reward.sigma.feet_pos", w.sigma.feet_pos);
  v("reward.sigma.dof_pos", w.sigma.dof_pos);
  v("reward.w_sparse", w.w_sparse);
  v("reward.w_dense", w.w_dense);
  v("reward.soft_torque_limit", w.soft_torque_limit);
  v("reward.soft_dof_pos_limit", w.soft_dof_pos_limit);
  v("reward.global_every_tick", w.global_every_tick);
  v("reward.phase_weighted", w.phase_weighted);

  v("env.action_scale", c.env.action_scale);
  v("env.action_clip", c.env.action_clip);
  v("env.action_base", c.env.action_base);
  v("env.rsi", c.env.rsi);
  v("env.history", c.env.history);
  v("env.termination.min_root_z", c.env.termination.min_root_z);
  v("env.termination.max_abs_pitch", c.env.termination.max_abs_pitch);
  v("env.termination.tracking_threshold", c.env.termination.tracking_threshold);

  train::PpoConfig& p = c.train.ppo;
  v("train.ppo.clip", p.clip);
  v("train.ppo.entropy_coef", p.entropy_coef);
  v("train.ppo.lambda", p.lambda);
  v("train.ppo.desired_kl", p.desired_kl);
  v("train.ppo.epochs", p.epochs);
  v("train.ppo.minibatches", p.minibatches);
  v("train.ppo.lr", p.lr);
  v("train.ppo.lr_min", p.lr_min);
  v("train.ppo.lr_max", p.lr_max);
  v("train.ppo.gamma_sparse", p.gamma_sparse);
  v("train.ppo.gamma_dense", p.gamma_dense);
  v("train.ppo.value_coef", p.value_coef);
  v("train.ppo.max_grad_norm", p.max_grad_norm);
  v("train.ppo.lipschitz_coef", p.lipschitz_coef);
  v("train.ppo.lipschitz_sigma", p.lipschitz_sigma);
  v("train.n_envs", c.train.n_envs);
  v("train.n_steps", c.train.n_steps);
  v("train.stage1_iterations", c.train.stage1_iterations);
  v("train.stage2_iterations", c.train.stage2_iterations);
  v("train.workers", c.train.workers);
  v("train.relax_after", c.train.relax_after);
  v("train.actor_hidden", c.train.actor_hidden);
  v("train.critic_hidden", c.train.critic_hidden);
  v("train.adapter_hidden", c.train.adapter_hidden);
  v("train.init_log_std", c.train.init_log_std);
  v("train.adapter_init_log_std", c.train.adapter_init_log_std);
  v("train.phase_lower", c.train.phase_bounds.lower);
  v("train.phase_upper", c.train.phase_bounds.upper);
  v("train.pipeline", c.train.pipeline);
  v("train.freeze_base", c.train.freeze_base);
  v("train.base_checkpoint", c.train.base_checkpoint);

  v("eval.success_ratio", c.eval.success_ratio);
  v("eval.deterministic", c.eval.deterministic);
  v("eval.randomization", c.eval.randomization);
  v("eval.episodes_per_psi", c.eval.episodes_per_psi);
  v("eval.points_per_range", c.eval.points_per_range);
  v("eval.workers", c.eval.workers);
  v("eval.seeds", c.eval_seeds);
}

// Reports the first key of `in` that has no counterpart in `known`.
inline void CheckKnownKeys(const json& in, const json& known, const std::string& prefix) {
  if (!in.is_object()) return;
  for (auto it = in.begin(); it != in.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!known.is_object() || !known.contains(it.key())) Fail(ErrorCode::kConfig, "unknown field '" + path + "'");
    CheckKnownKeys(it.value(), known.at(it.key()), path);
  }
}

}  // namespace detail

inline nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  detail::Writer w;
  detail::VisitFields(w, const_cast<ExperimentConfig&>(c));
  return w.out;
}

// Strict parse: unknown fields and wrongly typed values are config errors
// naming the dotted field path; omitted fields keep their defaults.
inline ExperimentConfig ConfigFromJson(const nlohmann::json& j) {
  Require(j.is_object(), ErrorCode::kConfig, "config must be a JSON object");
  detail::CheckKnownKeys(j, ConfigToJson(ExperimentConfig{}), "");
  ExperimentConfig c;
  detail::Reader r(j);
  detail::VisitFields(r, c);
  c.train.seed = c.seed;
  c.env.reward.w_sparse = c.train.ppo.w_sparse = c.env.reward.w_sparse;
  c.train.ppo.w_dense = c.env.reward.w_dense;
  c.Validate();
  return c;
}

inline void ExperimentConfig::Validate() const {
  auto field = [](const std::string& name, auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      Fail(ErrorCode::kConfig, name + ": " + e.what());
    }
  };
  field("task", [&] {
    Require(dataset.params.distance > 0.0 && dataset.params.apex_height > 0.0, ErrorCode::kConfig,
            "task.distance and task.apex_height must be positive");
    Require(dataset.range.lo <= dataset.range.hi, ErrorCode::kConfig, "task.edit_range is empty");
    Require(dataset.range.Contains(env.train_range.lo) && dataset.range.Contains(env.train_range.hi),
            ErrorCode::kConfig, "task.train_range must lie inside task.edit_range");
    bands.Validate();
  });
  field("motion", [&] {
    Require(dataset.keyframes.n_uniform >= 0, ErrorCode::kConfig, "motion.uniform_keyframes must be >= 0");
    Require(dataset.keyframes.semantic_scale > 0.0, ErrorCode::kConfig, "motion.semantic_reward_scale must be > 0");
  });
  field("sim/env", [&] {
    Require(env.sim.control_hz > 0.0 && env.sim.physics_hz > 0.0, ErrorCode::kConfig, "sim rates must be positive");
    (void)env.sim.substeps();
    env.Validate();
  });
  field("train", [&] { train.Validate(); });
  field("eval", [&] {
    eval.Validate();
    Require(!eval_seeds.empty(), ErrorCode::kConfig, "eval.seeds must not be empty");
  });
}

inline ExperimentConfig WithSeed(ExperimentConfig c, std::uint64_t seed) {
  c.seed = c.train.seed = seed;
  return c;
}

// Short content hash of the canonical (sorted-key) config serialization.
inline std::string ConfigHash(const ExperimentConfig& c) { return Sha256Hex(ConfigToJson(c).dump()).substr(0, 16); }

// "a.b.c=value": value parsed as JSON when possible, else taken as a string.
inline void ApplyOverride(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  Require(eq != std::string::npos && eq > 0, ErrorCode::kConfig,
          "override must look like key.path=value (got '" + assignment + "')");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[detail::Pointer(key)] = value;
}

inline nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream f(path);
  Require(f.good(), ErrorCode::kConfig, "cannot open config file " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kConfig, "config " + path + " is not valid JSON at byte " + std::to_string(e.byte));
  }
}

// Overrides turning the default (two-stage keyframe) setup into each
// compared method.
inline std::vector<std::string> MethodPreset(const std::string& name, const ExperimentConfig& base) {
  const double b = motion::TaskBaseValue(base.dataset.params);
  const std::string fixed = "task.train_range=[" + std::to_string(b) + "," + std::to_string(b) + "]";
  if (name == "keyframe_adapt") return {"train.pipeline=\"two_stage\""};
  if (name == "keyframe_stage1") return {"train.pipeline=\"stage1\""};
  if (name == "keyframe_stage1_phase") return {"train.pipeline=\"stage1_adaptive_phase\""};
  if (name == "keyframe_nofreeze") return {"train.pipeline=\"two_stage\"", "train.freeze_base=false"};
  if (name == "keyframe_dense")
    return {"train.pipeline=\"two_stage\"", "motion.mode=\"rule_edit_dense\"", "reward.global_every_tick=true"};
  if (name == "dense_fixed") return {"train.pipeline=\"stage1\"", "reward.global_every_tick=true", fixed};
  if (name == "dense_rule_adapt")
    return {"train.pipeline=\"stage1\"", "motion.mode=\"rule_edit_dense\"", "reward.global_every_tick=true"};
  if (name == "dense_rule_adapt_phase")
    return {"train.pipeline=\"stage1_adaptive_phase\"", "motion.mode=\"rule_edit_dense\"",
            "reward.global_every_tick=true"};
  Fail(ErrorCode::kConfig, "unknown method '" + name + "'");
}

inline const std::vector<std::string>& MethodNames() {
  static const std::vector<std::string> names = {"keyframe_adapt",          "keyframe_stage1",   "keyframe_stage1_phase",
                                                 "keyframe_nofreeze", "keyframe_dense",    "dense_fixed",
                                                 "dense_rule_adapt",   "dense_rule_adapt_phase"};
  return names;
}

// Loads a config file (or defaults when `path` is empty), applies a method
// preset and dotted overrides, and validates the result.
inline ExperimentConfig LoadConfig(const std::string& path, const std::vector<std::string>& overrides,
                                   const std::string& method = "") {
  nlohmann::json j = path.empty() ? nlohmann::json::object() : ReadJsonFile(path);
  if (!method.empty()) {
    const ExperimentConfig probe = ConfigFromJson(j);
    for (const std::string& o : MethodPreset(method, probe)) ApplyOverride(j, o);
  }
  for (const std::string& o : overrides) ApplyOverride(j, o);
  return ConfigFromJson(j);
}

inline sim::Morphology LoadConfigMorphology(const ExperimentConfig& c) {
  return c.morphology == "default" ? sim::DefaultCharacter() : sim::LoadMorphology(c.morphology);
}

}  // namespace keytrack::cli

#endif  // KEYTRACK_CLI_CONFIG_HPP_
