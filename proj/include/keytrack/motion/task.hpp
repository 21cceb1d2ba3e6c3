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

#ifndef KEYTRACK_MOTION_TASK_HPP_
#define KEYTRACK_MOTION_TASK_HPP_

#include <string>

#include "keytrack/common/error.hpp"

namespace keytrack::motion {

enum class TaskId { kFarJump, kHighJump };

inline std::string TaskName(TaskId t) { return t == TaskId::kFarJump ? "far_jump" : "high_jump"; }

inline TaskId ParseTask(const std::string& s) {
  if (s == "far_jump") return TaskId::kFarJump;
  if (s == "high_jump") return TaskId::kHighJump;
  Fail(ErrorCode::kConfig, "unknown task '" + s + "' (expected far_jump or high_jump)");
}

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_TASK_HPP_
