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

#ifndef KEYTRACK_CLI_RUN_HPP_
#define KEYTRACK_CLI_RUN_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "keytrack/adapters/stage2.hpp"
#include "keytrack/cli/config.hpp"
#include "keytrack/eval/evaluate.hpp"
#include "keytrack/nets/checkpoint.hpp"
#include "keytrack/trainer/stage1.hpp"

namespace keytrack::cli {

// A validated config together with the body and edited dataset it implies.
struct Experiment {
  ExperimentConfig cfg;
  sim::Morphology morph;
  motion::EditedDataset ds;
  std::string hash;

  explicit Experiment(const ExperimentConfig& c)
      : cfg(c), morph(LoadConfigMorphology(c)), ds(motion::BuildDataset(morph, c.dataset)), hash(ConfigHash(c)) {}
};

inline train::StageResult RunStage1(const Experiment& x, std::ostream* metrics = nullptr) {
  return train::TrainStage1(x.ds, x.morph, x.cfg.env, x.cfg.train, metrics);
}

inline train::StageResult RunStage2(const Experiment& x, const train::PolicyBundle& base,
                                    const std::string& expected_base_hash, std::ostream* metrics = nullptr) {
  Require(x.cfg.train.pipeline == train::Pipeline::kTwoStage, ErrorCode::kConfig,
          "train.pipeline is '" + train::PipelineName(x.cfg.train.pipeline) + "'; adapter training needs two_stage");
  return adapters::TrainStage2(base, x.ds, x.morph, x.cfg.env, x.cfg.train, expected_base_hash, metrics);
}

// Full training pipeline of the configured method.
inline train::PolicyBundle TrainMethod(const Experiment& x, std::ostream* metrics = nullptr) {
  train::StageResult s1 = RunStage1(x, metrics);
  if (x.cfg.train.pipeline != train::Pipeline::kTwoStage) return s1.bundle;
  return RunStage2(x, s1.bundle, train::BaseHash(s1.bundle), metrics).bundle;
}

inline eval::SweepReport EvaluateBands(const Experiment& x, const train::PolicyBundle& policy,
                                       eval::BandSelect which, bool record_traces = false) {
  eval::EvalConfig ec = x.cfg.eval;
  ec.record_traces = record_traces;
  return eval::EvaluatePolicy(policy, x.ds, x.morph, x.cfg.env, ec,
                              eval::BandGrid(x.cfg.bands, ec.points_per_range, which), x.cfg.eval_seeds);
}

inline void SavePolicy(const Experiment& x, const train::PolicyBundle& b, const std::string& path) {
  nets::SaveCheckpoint(train::ToCheckpoint(b, x.hash, ConfigToJson(x.cfg).dump()), path);
}

inline train::PolicyBundle LoadPolicy(const std::string& path) {
  return train::FromCheckpoint(nets::LoadCheckpoint(path));
}

}  // namespace keytrack::cli

#endif  // KEYTRACK_CLI_RUN_HPP_
