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

#ifndef KEYTRACK_CLI_COMMANDS_HPP_
#define KEYTRACK_CLI_COMMANDS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "keytrack/common/error.hpp"

namespace keytrack::cli {

// Process exit codes of the command-line tool.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDependency = 3;
constexpr int kExitRuntime = 4;

// Options shared by every command; unused fields are ignored.
struct CommandOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string method;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "runs";
  std::string band = "all";
  std::string checkpoint;
  std::vector<std::string> runs;  // compare: label=checkpoint
  std::vector<double> psi;
  bool verbose = false;
};

// Each command writes its artifacts to <out>/<command>-<config hash>-<timestamp>/
// and returns kExitOk; failures are reported by throwing keytrack::Error.
int CmdGenMotion(const CommandOptions& o);
int CmdEdit(const CommandOptions& o);
int CmdTrainStage1(const CommandOptions& o);
int CmdTrainStage2(const CommandOptions& o);
int CmdEval(const CommandOptions& o);
int CmdCompare(const CommandOptions& o);

// Maps an error category to the process exit code.
int ExitCodeFor(ErrorCode c);

}  // namespace keytrack::cli

#endif  // KEYTRACK_CLI_COMMANDS_HPP_
