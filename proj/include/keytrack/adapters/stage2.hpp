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

#ifndef KEYTRACK_ADAPTERS_STAGE2_HPP_
#define KEYTRACK_ADAPTERS_STAGE2_HPP_

#include <ostream>
#include <string>

#include "keytrack/common/error.hpp"
#include "keytrack/trainer/stage1.hpp"

namespace keytrack::adapters {

// Adds zero-initialized phase and tracking adapters (with their own double
// critics) on top of a stage-1 policy. The result acts exactly like the
// base policy until the adapters are trained.
inline train::PolicyBundle AttachAdapters(const train::PolicyBundle& base, const train::TrainConfig& cfg) {
  Require(!base.has_track, ErrorCode::kInvalidArgument, "policy already carries adapters");
  train::PolicyBundle b = base;
  b.actor_norm.Freeze();
  b.critic_norm.Freeze();
  b.bounds = cfg.phase_bounds;
  Rng rng(DeriveSeed(cfg.seed, {train::kStage2Tag, 0x1417ull}));
  train::AddPhaseHead(b, cfg, rng, true);
  train::AddTrackHead(b, cfg, rng);
  b.base_hash = train::BaseHash(b);
  return b;
}

// Trains both adapters on shared trajectories. With a frozen base (the
// default) the tracking policy, its critics and normalization are left
// bit-identical; `expected_base_hash`, when given, must match the base.
inline train::StageResult TrainStage2(const train::PolicyBundle& base, const motion::EditedDataset& ds,
                                      const sim::Morphology& morph, const train::EnvConfig& env_cfg,
                                      const train::TrainConfig& cfg, const std::string& expected_base_hash = "",
                                      std::ostream* metrics = nullptr,
                                      std::function<void(const train::IterationMetrics&)> on_iteration = nullptr) {
  const std::string hash = train::BaseHash(base);
  Require(expected_base_hash.empty() || expected_base_hash == hash, ErrorCode::kHashMismatch,
          "base checkpoint hash mismatch: expected " + expected_base_hash + ", found " + hash);
  train::StageResult out{AttachAdapters(base, cfg), {}};
  train::LoopOptions loop;
  loop.mode = train::PolicyMode::kAdapters;
  loop.iterations = cfg.stage2_iterations;
  loop.iteration_offset = cfg.stage1_iterations;
  loop.update_normalizer = false;
  loop.update_base = !cfg.freeze_base;
  loop.stage_tag = train::kStage2Tag;
  loop.metrics = metrics;
  loop.on_iteration = std::move(on_iteration);
  out.metrics = train::RunTraining(out.bundle, ds, morph, env_cfg, cfg, loop);
  const std::string after = train::BaseHash(out.bundle);
  if (cfg.freeze_base) {
    Require(after == hash, ErrorCode::kHashMismatch, "frozen tracking policy changed during adapter training");
  } else {
    out.bundle.base_hash = after;  // the unfrozen base is part of the result
  }
  return out;
}

}  // namespace keytrack::adapters

#endif  // KEYTRACK_ADAPTERS_STAGE2_HPP_
