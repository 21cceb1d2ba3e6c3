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

#ifndef KEYTRACK_COMMON_LOG_HPP_
#define KEYTRACK_COMMON_LOG_HPP_

#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>

namespace keytrack {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

inline std::atomic<int>& LogThreshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::kInfo)};
  return level;
}

inline void SetLogLevel(LogLevel level) { LogThreshold() = static_cast<int>(level); }

// Line-oriented logging to stderr; safe to call from worker threads.
inline void Log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < LogThreshold()) return;
  static std::mutex mu;
  static constexpr const char* kTags[] = {"D", "I", "W", "E", ""};
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[%s] %s\n", kTags[static_cast<int>(level)], message.c_str());
}

}  // namespace keytrack

#endif  // KEYTRACK_COMMON_LOG_HPP_
