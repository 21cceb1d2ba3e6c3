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

#ifndef KEYTRACK_SIM_RANDOMIZATION_HPP_
#define KEYTRACK_SIM_RANDOMIZATION_HPP_

#include <cmath>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/random.hpp"

namespace keytrack::sim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool Contains(double v) const { return v >= lo && v <= hi; }
  bool Valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
};

// Ranges follow the legged-robot randomization table, scaled from a
// 1.3 m / 35 kg humanoid to the 1 m planar character.
struct RandomizationConfig {
  bool enabled = true;
  Range trunk_mass_delta{-1.2, 3.0};   // kg
  Range base_com_offset{-0.075, 0.075};  // m, per axis
  Range link_mass_scale{0.9, 1.1};
  Range friction{0.1, 1.1};
  Range restitution{0.0, 0.1};
  Range kp_scale{0.85, 1.15};
  Range kd_scale{0.85, 1.15};
  Range motor_strength{0.9, 1.1};
  int max_delay_ticks = 5;  // 0-100 ms at 50 Hz
  int min_delay_ticks = 0;

  void Validate() const {
    for (const Range* r : {&trunk_mass_delta, &base_com_offset, &link_mass_scale, &friction,
                           &restitution, &kp_scale, &kd_scale, &motor_strength})
      Require(r->Valid(), ErrorCode::kConfig, "randomization range must satisfy lo <= hi");
    Require(link_mass_scale.lo > 0.0 && friction.lo >= 0.0 && motor_strength.lo >= 0.0,
            ErrorCode::kConfig, "randomization scales must be non-negative");
    Require(min_delay_ticks >= 0 && min_delay_ticks <= max_delay_ticks, ErrorCode::kConfig,
            "delay ticks must satisfy 0 <= min <= max");
  }

  // Every range collapsed onto its nominal value.
  static RandomizationConfig Nominal(double friction = 1.0) {
    RandomizationConfig c;
    c.enabled = false;
    c.trunk_mass_delta = {0, 0};
    c.base_com_offset = {0, 0};
    c.link_mass_scale = {1, 1};
    c.friction = {friction, friction};
    c.restitution = {0, 0};
    c.kp_scale = {1, 1};
    c.kd_scale = {1, 1};
    c.motor_strength = {1, 1};
    c.max_delay_ticks = 0;
    return c;
  }
};

struct RandomizationDraw {
  double trunk_mass_delta = 0.0;
  double base_com_offset_x = 0.0;
  double base_com_offset_z = 0.0;
  double link_mass_scale = 1.0;
  double friction = 1.0;
  double restitution = 0.0;
  double kp_scale = 1.0;
  double kd_scale = 1.0;
  double motor_strength = 1.0;
  int delay_ticks = 0;

  bool operator==(const RandomizationDraw&) const = default;

  bool WithinRanges(const RandomizationConfig& c) const {
    return c.trunk_mass_delta.Contains(trunk_mass_delta) &&
           c.base_com_offset.Contains(base_com_offset_x) &&
           c.base_com_offset.Contains(base_com_offset_z) &&
           c.link_mass_scale.Contains(link_mass_scale) && c.friction.Contains(friction) &&
           c.restitution.Contains(restitution) && c.kp_scale.Contains(kp_scale) &&
           c.kd_scale.Contains(kd_scale) && c.motor_strength.Contains(motor_strength) &&
           delay_ticks >= c.min_delay_ticks && delay_ticks <= c.max_delay_ticks;
  }
};

inline RandomizationDraw SampleRandomization(const RandomizationConfig& c, Rng& rng) {
  RandomizationDraw d;
  d.trunk_mass_delta = Uniform(rng, c.trunk_mass_delta.lo, c.trunk_mass_delta.hi);
  d.base_com_offset_x = Uniform(rng, c.base_com_offset.lo, c.base_com_offset.hi);
  d.base_com_offset_z = Uniform(rng, c.base_com_offset.lo, c.base_com_offset.hi);
  d.link_mass_scale = Uniform(rng, c.link_mass_scale.lo, c.link_mass_scale.hi);
  d.friction = Uniform(rng, c.friction.lo, c.friction.hi);
  d.restitution = Uniform(rng, c.restitution.lo, c.restitution.hi);
  d.kp_scale = Uniform(rng, c.kp_scale.lo, c.kp_scale.hi);
  d.kd_scale = Uniform(rng, c.kd_scale.lo, c.kd_scale.hi);
  d.motor_strength = Uniform(rng, c.motor_strength.lo, c.motor_strength.hi);
  d.delay_ticks = c.min_delay_ticks == c.max_delay_ticks
                      ? c.min_delay_ticks
                      : std::uniform_int_distribution<int>(c.min_delay_ticks, c.max_delay_ticks)(rng);
  return d;
}

inline RandomizationDraw SampleRandomization(const RandomizationConfig& c, std::uint64_t seed) {
  Rng rng(SplitMix64(seed));
  return SampleRandomization(c, rng);
}

inline nlohmann::json RangeJson(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

inline Range RangeFromJson(const nlohmann::json& j) {
  Require(j.is_array() && j.size() == 2, ErrorCode::kConfig, "range must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json DrawToJson(const RandomizationDraw& d) {
  return {{"trunk_mass_delta", d.trunk_mass_delta}, {"base_com_offset", {d.base_com_offset_x, d.base_com_offset_z}},
          {"link_mass_scale", d.link_mass_scale}, {"friction", d.friction},
          {"restitution", d.restitution}, {"kp_scale", d.kp_scale}, {"kd_scale", d.kd_scale},
          {"motor_strength", d.motor_strength}, {"delay_ticks", d.delay_ticks}};
}

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_RANDOMIZATION_HPP_
