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

#ifndef KEYTRACK_TRAINER_STAGE1_HPP_
#define KEYTRACK_TRAINER_STAGE1_HPP_

#include <ostream>
#include <vector>

#include "keytrack/common/random.hpp"
#include "keytrack/trainer/trainer.hpp"

namespace keytrack::train {

inline constexpr std::uint64_t kStage1Tag = 1;
inline constexpr std::uint64_t kStage2Tag = 2;

struct StageResult {
  PolicyBundle bundle;
  std::vector<IterationMetrics> metrics;
};

// Fresh tracking policy (plus a phase head in the single-stage adaptive
// interval variant) sized for the dataset and body.
inline PolicyBundle NewStage1Policy(const motion::EditedDataset& ds, const sim::Morphology& morph,
                                    const EnvConfig& env_cfg, const TrainConfig& cfg) {
  const TrackingEnv probe(&ds, &morph, env_cfg, 0);
  Rng rng(DeriveSeed(cfg.seed, {kStage1Tag, 0x1417ull}));
  PolicyBundle b = MakeBasePolicy(probe.layout(), probe.dphi_base(), env_cfg.action_clip, cfg, rng);
  if (cfg.pipeline == Pipeline::kStage1AdaptivePhase) AddPhaseHead(b, cfg, rng, false);
  return b;
}

// Trains the tracking policy with fixed (or, for the adaptive-interval
// variant, jointly learned) phase intervals. Normalization statistics are
// frozen at the end.
inline StageResult TrainStage1(const motion::EditedDataset& ds, const sim::Morphology& morph, const EnvConfig& env_cfg,
                               const TrainConfig& cfg, std::ostream* metrics = nullptr,
                               std::function<void(const IterationMetrics&)> on_iteration = nullptr) {
  StageResult out{NewStage1Policy(ds, morph, env_cfg, cfg), {}};
  LoopOptions loop;
  loop.mode = cfg.pipeline == Pipeline::kStage1AdaptivePhase ? PolicyMode::kBaseAdaptivePhase : PolicyMode::kBase;
  loop.iterations = cfg.stage1_iterations;
  loop.update_normalizer = true;
  loop.stage_tag = kStage1Tag;
  loop.metrics = metrics;
  loop.on_iteration = std::move(on_iteration);
  out.metrics = RunTraining(out.bundle, ds, morph, env_cfg, cfg, loop);
  out.bundle.actor_norm.Freeze();
  out.bundle.critic_norm.Freeze();
  return out;
}

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_STAGE1_HPP_
