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

// keytrack command-line interface: motion generation, editing, training,
// evaluation and method comparison. Argument parsing lives here; the
// commands themselves are in src/cli/commands.cpp.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "keytrack/cli/commands.hpp"
#include "keytrack/cli/config.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/log.hpp"

using namespace keytrack;

int main(int argc, char** argv) {
  CLI::App app{"keytrack: keyframe-guided motion tracking with phase and action adapters"};
  app.require_subcommand(1, 1);
  cli::CommandOptions o;
  auto add_common = [&o](CLI::App* c) {
    c->add_option("--config", o.config, "experiment config (JSON); defaults when omitted");
    c->add_option("--set", o.overrides, "dotted override key.path=value (repeatable)");
    c->add_option("--method", o.method, "method preset applied before --set overrides")
        ->check(CLI::IsMember(cli::MethodNames()));
    c->add_option("--seed", o.seed, "master seed (overrides the config)")->each([&o](const std::string&) {
      o.seed_given = true;
    });
    c->add_option("--out", o.out, "directory that receives run directories")->capture_default_str();
    c->add_flag("-v,--verbose", o.verbose, "debug logging");
  };
  auto* gen = app.add_subcommand("gen-motion", "generate the base reference motion and keyframes");
  auto* edit = app.add_subcommand("edit", "write edited keyframes for task values");
  auto* s1 = app.add_subcommand("train-stage1", "train the tracking policy");
  auto* s2 = app.add_subcommand("train-stage2", "train phase and tracking adapters on a frozen stage-1 policy");
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint over the task-value bands");
  auto* cmp = app.add_subcommand("compare", "evaluate several checkpoints and write a comparison table and plots");
  for (auto* c : {gen, edit, s1, s2, ev, cmp}) add_common(c);
  edit->add_option("--psi", o.psi, "task values to edit (default: evaluation grid)");
  for (auto* c : {edit, ev, cmp})
    c->add_option("--band", o.band, "task-value band")->check(CLI::IsMember({"easy", "hard", "all"}))->capture_default_str();
  s2->add_option("--checkpoint", o.checkpoint, "stage-1 checkpoint (default: train.base_checkpoint)");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint to evaluate")->required();
  cmp->add_option("--run", o.runs, "label=checkpoint (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }
  SetLogLevel(o.verbose ? LogLevel::kDebug : LogLevel::kWarning);
  try {
    if (gen->parsed()) return cli::CmdGenMotion(o);
    if (edit->parsed()) return cli::CmdEdit(o);
    if (s1->parsed()) return cli::CmdTrainStage1(o);
    if (s2->parsed()) return cli::CmdTrainStage2(o);
    if (ev->parsed()) return cli::CmdEval(o);
    if (cmp->parsed()) return cli::CmdCompare(o);
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return cli::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitRuntime;
  }
  return cli::kExitRuntime;
}
