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

#ifndef KEYTRACK_COMMON_ERROR_HPP_
#define KEYTRACK_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace keytrack {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kInfeasible,
  kParse,
  kSchema,
  kMorphologyMismatch,
  kSimulationDiverged,
  kDimensionMismatch,
  kStaleCache,
  kConfig,
  kDependency,
  kHashMismatch,
  kIo,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kInfeasible: return "infeasible_parameters";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kMorphologyMismatch: return "morphology_mismatch";
    case ErrorCode::kSimulationDiverged: return "simulation_diverged";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kStaleCache: return "stale_cache";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kDependency: return "dependency_error";
    case ErrorCode::kHashMismatch: return "hash_mismatch";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a physics substep produces a non-finite state.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(int substep, const std::string& detail)
      : Error(ErrorCode::kSimulationDiverged,
              "non-finite state at substep " + std::to_string(substep) +
                  " (" + detail + ")"),
        substep_(substep) {}

  int substep() const { return substep_; }

 private:
  int substep_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace keytrack

#endif  // KEYTRACK_COMMON_ERROR_HPP_
