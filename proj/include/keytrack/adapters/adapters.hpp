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

#ifndef KEYTRACK_ADAPTERS_ADAPTERS_HPP_
#define KEYTRACK_ADAPTERS_ADAPTERS_HPP_

#include <algorithm>
#include <cmath>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::adapters {

// Bounds of the phase-interval delta as fractions of the base interval.
struct PhaseBounds {
  double lower = 0.75;  // delta >= -lower * dphi_base
  double upper = 1.0;  // delta <= +upper * dphi_base

  void Validate() const {
    Require(lower >= 0.0 && lower < 1.0, ErrorCode::kConfig, "phase lower bound must lie in [0, 1)");
    Require(upper >= 0.0 && std::isfinite(upper), ErrorCode::kConfig, "phase upper bound must be >= 0");
  }
};

struct PhaseAdaptation {
  double dphi_delta = 0.0;
  double dphi_ada = 0.0;
};

// tanh squash followed by a two-sided linear map: the negative half of the
// squash range covers [-lower, 0] and the positive half [0, upper] (in
// units of dphi_base), so a raw output of 0 leaves the interval unchanged.
inline PhaseAdaptation AdaptPhase(double raw, double dphi_base, const PhaseBounds& b = {}) {
  Require(dphi_base > 0.0, ErrorCode::kInvalidArgument, "base phase interval must be positive");
  Require(std::isfinite(raw), ErrorCode::kInvalidArgument, "phase adapter output is not finite");
  const double s = std::tanh(raw);
  PhaseAdaptation p;
  p.dphi_delta = (s < 0.0 ? b.lower : b.upper) * dphi_base * s;
  p.dphi_ada = std::clamp(dphi_base + p.dphi_delta, (1.0 - b.lower) * dphi_base, (1.0 + b.upper) * dphi_base);
  return p;
}

// a_ada = clip(a + dphi_delta * a_delta, +-clip).
inline VecX AdaptAction(const VecX& base_action, double dphi_delta, const VecX& a_delta, double clip) {
  Require(base_action.size() == a_delta.size(), ErrorCode::kDimensionMismatch,
          "base action and compensation differ in size");
  const VecX a = base_action + dphi_delta * a_delta;
  return a.cwiseMax(-clip).cwiseMin(clip);
}

// Input of the tracking adapter: the actor observation followed by the
// adapted interval relative to the base interval.
inline VecX TrackAdapterInput(const VecX& obs, double dphi_ada, double dphi_base) {
  VecX in(obs.size() + 1);
  in << obs, dphi_ada / dphi_base;
  return in;
}

}  // namespace keytrack::adapters

#endif  // KEYTRACK_ADAPTERS_ADAPTERS_HPP_
