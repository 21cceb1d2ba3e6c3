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


#ifndef KEYTRACK_TESTS_TEST_UTIL_HPP_
#define KEYTRACK_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "keytrack/common/error.hpp"

namespace keytrack::testing {

// Runs `fn` and reports whether it raised keytrack::Error with `code`.
// On success the message is stored in *message when given.
inline ::testing::AssertionResult RaisesCode(const std::function<void()>& fn, ErrorCode code,
                                             std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() != code)
      return ::testing::AssertionFailure() << "raised " << ErrorCodeName(e.code()) << " instead of "
                                           << ErrorCodeName(code) << ": " << e.what();
    if (message != nullptr) *message = e.what();
    return ::testing::AssertionSuccess();
  }
  return ::testing::AssertionFailure() << "no error raised, expected " << ErrorCodeName(code);
}

// Fresh per-test scratch directory under the system temp directory.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "keytrack_tests" /
                              (std::string(info->test_suite_name()) + "." + info->name() + "." + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace keytrack::testing

#endif  // KEYTRACK_TESTS_TEST_UTIL_HPP_
