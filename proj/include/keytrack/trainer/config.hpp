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

#ifndef KEYTRACK_TRAINER_CONFIG_HPP_
#define KEYTRACK_TRAINER_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "keytrack/adapters/adapters.hpp"
#include "keytrack/common/error.hpp"

namespace keytrack::train {

struct PpoConfig {
  double clip = 0.2;
  double entropy_coef = 0.01;
  double lambda = 0.95;
  double desired_kl = 0.01;
  int epochs = 5;
  int minibatches = 4;
  double lr = 1e-3;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double gamma_sparse = 1.0;
  double gamma_dense = 0.99;
  double w_sparse = 1.0;
  double w_dense = 0.5;
  double value_coef = 1.0;
  double max_grad_norm = 1.0;
  // Optional output-Lipschitz penalty on the actor mean (0 disables).
  double lipschitz_coef = 0.0;
  double lipschitz_sigma = 0.05;

  void Validate() const {
    Require(clip > 0.0, ErrorCode::kConfig, "ppo.clip must be > 0");
    Require(lambda > 0.0 && lambda <= 1.0, ErrorCode::kConfig, "ppo.lambda must lie in (0, 1]");
    Require(gamma_sparse >= 0.0 && gamma_sparse <= 1.0 && gamma_dense >= 0.0 && gamma_dense <= 1.0,
            ErrorCode::kConfig, "discount factors must lie in [0, 1]");
    Require(epochs >= 1 && minibatches >= 1, ErrorCode::kConfig, "ppo.epochs and ppo.minibatches must be >= 1");
    Require(lr_min > 0.0 && lr_min <= lr && lr <= lr_max, ErrorCode::kConfig,
            "learning rates must satisfy 0 < lr_min <= lr <= lr_max");
    Require(desired_kl > 0.0, ErrorCode::kConfig, "ppo.desired_kl must be > 0");
    Require(w_sparse >= 0.0 && w_dense >= 0.0, ErrorCode::kConfig, "group weights must be >= 0");
    Require(entropy_coef >= 0.0 && value_coef >= 0.0 && max_grad_norm >= 0.0 && lipschitz_coef >= 0.0,
            ErrorCode::kConfig, "loss coefficients must be >= 0");
  }
};

// Which policy components act and learn.
enum class PolicyMode {
  kBase,  // stage 1: tracking policy at the fixed phase interval
  kBaseAdaptivePhase,  // single stage: tracking policy plus a jointly trained phase head
  kAdapters,  // stage 2: frozen tracking policy plus phase and tracking adapters
};

enum class Pipeline { kStage1, kStage1AdaptivePhase, kTwoStage };

inline std::string PipelineName(Pipeline p) {
  switch (p) {
    case Pipeline::kStage1: return "stage1";
    case Pipeline::kStage1AdaptivePhase: return "stage1_adaptive_phase";
    case Pipeline::kTwoStage: return "two_stage";
  }
  return "unknown";
}

inline Pipeline ParsePipeline(const std::string& s) {
  if (s == "stage1") return Pipeline::kStage1;
  if (s == "stage1_adaptive_phase") return Pipeline::kStage1AdaptivePhase;
  if (s == "two_stage") return Pipeline::kTwoStage;
  Fail(ErrorCode::kConfig, "unknown pipeline '" + s + "' (expected stage1, stage1_adaptive_phase or two_stage)");
}

struct TrainConfig {
  PpoConfig ppo;
  int n_envs = 64;
  int n_steps = 75;
  int stage1_iterations = 1000;
  int stage2_iterations = 400;
  int workers = 1;
  int relax_after = 750;  // iteration from which termination is relaxed
  std::vector<int> actor_hidden = {64, 64};
  std::vector<int> critic_hidden = {64, 64};
  std::vector<int> adapter_hidden = {64, 64};
  double init_log_std = -1.0;
  double adapter_init_log_std = -1.0;
  adapters::PhaseBounds phase_bounds;
  Pipeline pipeline = Pipeline::kTwoStage;
  bool freeze_base = true;
  std::uint64_t seed = 1;
  std::string base_checkpoint;  // stage 2 input; empty = <out>/stage1/checkpoint.bin

  void Validate() const {
    ppo.Validate();
    phase_bounds.Validate();
    Require(n_envs >= 1 && n_steps >= 1, ErrorCode::kConfig, "train.n_envs and train.n_steps must be >= 1");
    Require(stage1_iterations >= 0 && stage2_iterations >= 0, ErrorCode::kConfig, "iteration budgets must be >= 0");
    Require(workers >= 1, ErrorCode::kConfig, "train.workers must be >= 1");
    for (const auto* h : {&actor_hidden, &critic_hidden, &adapter_hidden})
      for (int s : *h) Require(s >= 1, ErrorCode::kConfig, "hidden layer sizes must be >= 1");
  }
};

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_CONFIG_HPP_
