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

#ifndef KEYTRACK_MOTION_MOTION_IO_HPP_
#define KEYTRACK_MOTION_MOTION_IO_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/motion/reference_motion.hpp"
#include "keytrack/sim/morphology.hpp"

namespace keytrack::motion {

inline constexpr int kMotionSchemaVersion = 1;

inline nlohmann::json MotionToJson(const ReferenceMotion& m) {
  nlohmann::json frames = nlohmann::json::array();
  for (const Frame& f : m.frames()) {
    nlohmann::json joints = nlohmann::json::array();
    for (int j = 0; j < f.num_joints(); ++j) joints.push_back(f.joint_angles[j]);
    frames.push_back({{"root", {f.root_pos.x(), f.root_pos.y(), f.root_pitch}}, {"joints", joints}});
  }
  return {{"schema_version", kMotionSchemaVersion},
          {"morphology_id", m.morphology_id()},
          {"frame_rate_hz", m.frame_rate_hz()},
          {"frames", frames}};
}

// Velocities are not stored; they are re-derived on load, which reproduces
// them exactly.
inline ReferenceMotion MotionFromJson(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    Require(version == kMotionSchemaVersion, ErrorCode::kSchema,
            "motion schema version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kMotionSchemaVersion) + ")");
    std::vector<Frame> frames;
    for (const auto& jf : j.at("frames")) {
      const auto& root = jf.at("root");
      Require(root.size() == 3, ErrorCode::kSchema, "frame root must be [x, z, pitch]");
      Frame f;
      f.root_pos = Vec2(root[0].get<double>(), root[1].get<double>());
      f.root_pitch = root[2].get<double>();
      const auto angles = jf.at("joints").get<std::vector<double>>();
      f.joint_angles = Eigen::Map<const VecX>(angles.data(), static_cast<Eigen::Index>(angles.size()));
      frames.push_back(std::move(f));
    }
    return ReferenceMotion(j.at("morphology_id").get<std::string>(), j.at("frame_rate_hz").get<double>(),
                           std::move(frames));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchema, std::string("malformed motion file: ") + e.what());
  }
}

inline void SaveMotion(const ReferenceMotion& m, const std::string& path) {
  std::ofstream out(path);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write motion file '" + path + "'");
  out << MotionToJson(m).dump(1) << "\n";
  Require(static_cast<bool>(out), ErrorCode::kIo, "failed writing motion file '" + path + "'");
}

// Loads and, when a morphology is given, checks the motion against it.
inline ReferenceMotion LoadMotion(const std::string& path, const sim::Morphology* morph = nullptr) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open motion file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParse,
         "motion file '" + path + "' is not valid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ReferenceMotion m = MotionFromJson(j);
  if (morph != nullptr) m.ValidateAgainst(*morph);
  return m;
}

}  // namespace keytrack::motion

#endif  // KEYTRACK_MOTION_MOTION_IO_HPP_
