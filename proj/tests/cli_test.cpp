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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "keytrack/cli/config.hpp"
#include "keytrack/cli/run.hpp"
#include "test_util.hpp"

namespace keytrack::cli {
namespace {

namespace fs = std::filesystem;
using keytrack::testing::RaisesCode;
using keytrack::testing::ScratchDir;
using nlohmann::json;

TEST(ConfigTest, JsonRoundTripIsLossless) {
  ExperimentConfig c;
  c.seed = 42;
  c.env.train_range = {0.3, 0.5};
  c.train.actor_hidden = {32, 16};
  c.train.pipeline = train::Pipeline::kStage1AdaptivePhase;
  c.dataset.mode = motion::DatasetMode::kRuleEditDense;
  c.bands.hard = {{0.1, 0.2}};
  c.eval_seeds = {7, 8};
  const json j = ConfigToJson(c);
  const ExperimentConfig back = ConfigFromJson(j);
  EXPECT_EQ(ConfigToJson(back), j);
  EXPECT_EQ(ConfigHash(back), ConfigHash(c));
  EXPECT_EQ(back.train.seed, 42u);
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  EXPECT_EQ(ConfigToJson(ConfigFromJson(json::object())), ConfigToJson(ExperimentConfig{}));
}

TEST(ConfigTest, UnknownFieldNamesDottedPath) {
  json j = json::object();
  j["train"]["ppo"]["clip_typo"] = 0.2;
  std::string msg;
  EXPECT_TRUE(RaisesCode([&] { ConfigFromJson(j); }, ErrorCode::kConfig, &msg));
  EXPECT_NE(msg.find("train.ppo.clip_typo"), std::string::npos) << msg;
}

TEST(ConfigTest, WrongTypeNamesField) {
  json j = json::object();
  j["train"]["n_envs"] = "many";
  std::string msg;
  EXPECT_TRUE(RaisesCode([&] { ConfigFromJson(j); }, ErrorCode::kConfig, &msg));
  EXPECT_NE(msg.find("train.n_envs"), std::string::npos) << msg;
}

TEST(ConfigTest, InvalidValuesAreConfigErrors) {
  EXPECT_TRUE(RaisesCode([] { LoadConfig("", {"task.train_range=[0.0,5.0]"}); }, ErrorCode::kConfig));
  EXPECT_TRUE(RaisesCode([] { LoadConfig("", {"eval.seeds=[]"}); }, ErrorCode::kConfig));
  EXPECT_TRUE(RaisesCode([] { LoadConfig("", {"sim.physics_hz=75"}); }, ErrorCode::kConfig));
  EXPECT_TRUE(RaisesCode([] { LoadConfig("", {"novalue"}); }, ErrorCode::kConfig));
  EXPECT_TRUE(RaisesCode([] { LoadConfig("/nonexistent/config.json", {}); }, ErrorCode::kConfig));
}

TEST(ConfigTest, OverridesApplyAndChangeHash) {
  const ExperimentConfig base = LoadConfig("", {});
  const ExperimentConfig c = LoadConfig("", {"train.n_envs=8", "train.ppo.lr=0.0003", "seed=9"});
  EXPECT_EQ(c.train.n_envs, 8);
  EXPECT_DOUBLE_EQ(c.train.ppo.lr, 3e-4);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_NE(ConfigHash(c), ConfigHash(base));
  // The later override wins.
  EXPECT_EQ(LoadConfig("", {"train.n_envs=8", "train.n_envs=4"}).train.n_envs, 4);
}

TEST(ConfigTest, HashIsStableAndOrderIndependent) {
  const std::string h = ConfigHash(ExperimentConfig{});
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, ConfigHash(ExperimentConfig{}));
  EXPECT_EQ(ConfigHash(LoadConfig("", {"train.n_envs=8", "seed=3"})),
            ConfigHash(LoadConfig("", {"seed=3", "train.n_envs=8"})));
}

TEST(ConfigTest, WithSeedSetsBothSeeds) {
  const ExperimentConfig c = WithSeed(ExperimentConfig{}, 77);
  EXPECT_EQ(c.seed, 77u);
  EXPECT_EQ(c.train.seed, 77u);
}

TEST(MethodPresetTest, EveryNamedMethodLoads) {
  for (const std::string& name : MethodNames()) {
    SCOPED_TRACE(name);
    const ExperimentConfig c = LoadConfig("", {}, name);
    c.Validate();
  }
  EXPECT_TRUE(RaisesCode([] { MethodPreset("nope", ExperimentConfig{}); }, ErrorCode::kConfig));
}

TEST(MethodPresetTest, PresetsSetTheDistinguishingFields) {
  const ExperimentConfig base;
  const double b = motion::TaskBaseValue(base.dataset.params);
  EXPECT_EQ(LoadConfig("", {}, "keyframe_adapt").train.pipeline, train::Pipeline::kTwoStage);
  EXPECT_EQ(LoadConfig("", {}, "keyframe_stage1").train.pipeline, train::Pipeline::kStage1);
  EXPECT_EQ(LoadConfig("", {}, "keyframe_stage1_phase").train.pipeline, train::Pipeline::kStage1AdaptivePhase);
  EXPECT_FALSE(LoadConfig("", {}, "keyframe_nofreeze").train.freeze_base);
  const ExperimentConfig dense = LoadConfig("", {}, "keyframe_dense");
  EXPECT_EQ(dense.dataset.mode, motion::DatasetMode::kRuleEditDense);
  EXPECT_TRUE(dense.env.reward.global_every_tick);
  const ExperimentConfig fixed = LoadConfig("", {}, "dense_fixed");
  EXPECT_NEAR(fixed.env.train_range.lo, b, 1e-6);
  EXPECT_NEAR(fixed.env.train_range.hi, b, 1e-6);
  EXPECT_TRUE(fixed.env.reward.global_every_tick);
  const ExperimentConfig adapt = LoadConfig("", {}, "dense_rule_adapt");
  EXPECT_EQ(adapt.train.pipeline, train::Pipeline::kStage1);
  EXPECT_EQ(adapt.dataset.mode, motion::DatasetMode::kRuleEditDense);
  EXPECT_EQ(LoadConfig("", {}, "dense_rule_adapt_phase").train.pipeline, train::Pipeline::kStage1AdaptivePhase);
  // Explicit overrides take precedence over the preset.
  EXPECT_EQ(LoadConfig("", {"train.pipeline=\"stage1\""}, "keyframe_adapt").train.pipeline, train::Pipeline::kStage1);
}

TEST(ShippedConfigTest, ConfigsDirectoryParses) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(KEYTRACK_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const ExperimentConfig c = LoadConfig(entry.path().string(), {});
    const Experiment x(c);
    EXPECT_GT(x.ds.plan().size(), 0u);
    ++count;
  }
  EXPECT_GE(count, 2);
}

// Runs the CLI binary; returns its exit code and captures stdout+stderr.
int RunCli(const std::string& args, std::string* output) {
  const fs::path log = fs::temp_directory_path() / ("keytrack_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string("\"") + KEYTRACK_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream f(log);
  std::stringstream s;
  s << f.rdbuf();
  if (output != nullptr) *output = s.str();
  fs::remove(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Finds the single run directory whose name starts with `prefix`.
fs::path RunDir(const fs::path& out, const std::string& prefix) {
  fs::path found;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename().string().rfind(prefix, 0) == 0) found = e.path();
  return found;
}

TEST(CliTest, MissingStage1CheckpointExitsWithDependencyCode) {
  const fs::path out = ScratchDir("out");
  const std::string missing = (out / "no_such_stage1.ckpt").string();
  std::string text;
  EXPECT_EQ(RunCli("train-stage2 --out " + out.string() + " --checkpoint " + missing, &text), 3);
  EXPECT_NE(text.find(missing), std::string::npos) << text;
  EXPECT_EQ(RunCli("train-stage2 --out " + out.string(), &text), 3);
  EXPECT_NE(text.find("checkpoint"), std::string::npos) << text;
}

TEST(CliTest, InvalidConfigExitsWithConfigCode) {
  const fs::path out = ScratchDir("out");
  const fs::path bad = out / "bad.json";
  std::ofstream(bad) << R"({"train": {"n_envz": 4}})";
  std::string text;
  EXPECT_EQ(RunCli("gen-motion --out " + out.string() + " --config " + bad.string(), &text), 2);
  EXPECT_NE(text.find("train.n_envz"), std::string::npos) << text;
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(RunCli("gen-motion --out " + out.string() + " --config " + bad.string(), &text), 2);
  EXPECT_EQ(RunCli("gen-motion --out " + out.string() + " --method unknown_method", &text), 2);
  EXPECT_EQ(RunCli("no-such-command", &text), 2);
}

TEST(CliTest, GenMotionRecordsResolvedConfigAndOverrides) {
  const fs::path out = ScratchDir("out");
  std::string text;
  ASSERT_EQ(RunCli("gen-motion --out " + out.string() + " --set task.distance=0.35 --seed 5", &text), 0) << text;
  const fs::path dir = RunDir(out, "gen-motion-");
  ASSERT_FALSE(dir.empty());
  EXPECT_TRUE(fs::exists(dir / "motion.json"));
  EXPECT_TRUE(fs::exists(dir / "keyframes.json"));
  json run;
  std::ifstream(dir / "config.json") >> run;
  EXPECT_EQ(run["overrides"], json::array({"task.distance=0.35"}));
  EXPECT_EQ(run["seed"], 5);
  EXPECT_DOUBLE_EQ(run["config"]["task"]["distance"].get<double>(), 0.35);
  const ExperimentConfig c = WithSeed(LoadConfig("", {"task.distance=0.35"}), 5);
  EXPECT_EQ(run["config_hash"], ConfigHash(c));
  EXPECT_NE(dir.filename().string().find(ConfigHash(c)), std::string::npos);
}

TEST(CliTest, TinyPipelineRunsEndToEnd) {
  const fs::path out = ScratchDir("out");
  const std::string small =
      " --set train.n_envs=2 --set train.n_steps=10 --set train.stage1_iterations=1"
      " --set train.stage2_iterations=1 --set train.relax_after=1 --set eval.episodes_per_psi=1"
      " --set eval.points_per_range=1 --set eval.seeds=[1]";
  std::string text;
  ASSERT_EQ(RunCli("train-stage1 --out " + out.string() + small, &text), 0) << text;
  const fs::path s1 = RunDir(out, "train-stage1-");
  ASSERT_TRUE(fs::exists(s1 / "stage1.ckpt")) << text;
  ASSERT_EQ(RunCli("train-stage2 --out " + out.string() + small + " --checkpoint " + (s1 / "stage1.ckpt").string(),
                   &text),
            0)
      << text;
  const fs::path s2 = RunDir(out, "train-stage2-");
  ASSERT_TRUE(fs::exists(s2 / "stage2.ckpt")) << text;
  ASSERT_EQ(RunCli("eval --out " + out.string() + small + " --checkpoint " + (s2 / "stage2.ckpt").string(), &text),
            0)
      << text;
  const fs::path ev = RunDir(out, "eval-");
  EXPECT_TRUE(fs::exists(ev / "summary.json"));
  EXPECT_TRUE(fs::exists(ev / "episodes.jsonl"));
  ASSERT_EQ(RunCli("compare --out " + out.string() + small + " --run s1=" + (s1 / "stage1.ckpt").string() +
                       " --run s2=" + (s2 / "stage2.ckpt").string(),
                   &text),
            0)
      << text;
  const fs::path cmp = RunDir(out, "compare-");
  EXPECT_TRUE(fs::exists(cmp / "compare.csv"));
  EXPECT_TRUE(fs::exists(cmp / "error_vs_psi.svg"));
  // Eval on a missing checkpoint is a dependency error.
  EXPECT_EQ(RunCli("eval --out " + out.string() + " --checkpoint " + (out / "missing.ckpt").string(), &text), 3);
}

}  // namespace
}  // namespace keytrack::cli
