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

#ifndef KEYTRACK_SIM_MORPHOLOGY_HPP_
#define KEYTRACK_SIM_MORPHOLOGY_HPP_

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::sim {

// A rigid link. Its frame origin sits at the joint attaching it to its
// parent (for the root link: the pelvis). With all angles zero, link frames
// are aligned with the world x (forward) / z (up) axes.
struct Link {
  std::string name;
  double length = 0.0;   // m, geometric extent (rendering, scaling)
  double mass = 0.0;     // kg
  double inertia = 0.0;  // kg m^2 about the CoM
  Vec2 com = Vec2::Zero();
};

// Planar revolute joint between `parent` link and link `child`.
struct Joint {
  std::string name;
  int parent = 0;
  int child = 1;
  Vec2 anchor = Vec2::Zero();  // joint position in the parent link frame
  double lower = -kPi;
  double upper = kPi;
  double torque_limit = 100.0;   // N m
  double velocity_limit = 20.0;  // rad/s
  double kp = 100.0;
  double kd = 2.0;
  double armature = 0.0;  // reflected rotor inertia, kg m^2
};

struct FootPoint {
  int link = 0;
  Vec2 offset = Vec2::Zero();
};

struct Morphology {
  std::string id;
  std::vector<Link> links;  // links[0] is the floating root
  std::vector<Joint> joints;
  std::vector<FootPoint> foot_points;
  std::vector<int> foot_links;  // links whose orientation counts as "feet"
  bool fixed_base = false;
  double height = 1.0;  // m, standing height used to scale thresholds

  int num_joints() const { return static_cast<int>(joints.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  int dof() const { return 3 + num_joints(); }

  double total_mass() const {
    double m = 0.0;
    for (const Link& l : links) m += l.mass;
    return m;
  }

  // Joint index whose child is `link`, or -1 for the root.
  int joint_of_link(int link) const {
    for (int j = 0; j < num_joints(); ++j)
      if (joints[j].child == link) return j;
    return -1;
  }

  void Validate() const {
    Require(!links.empty(), ErrorCode::kSchema, "morphology has no links");
    Require(num_joints() == num_links() - 1, ErrorCode::kSchema,
            "morphology must be a tree: joints = links - 1");
    for (const Link& l : links) {
      Require(l.mass > 0.0 && std::isfinite(l.mass), ErrorCode::kSchema,
              "link '" + l.name + "' mass must be positive");
      Require(l.inertia >= 0.0 && std::isfinite(l.inertia), ErrorCode::kSchema,
              "link '" + l.name + "' inertia must be non-negative");
    }
    std::vector<int> seen(links.size(), 0);
    seen[0] = 1;
    for (int j = 0; j < num_joints(); ++j) {
      const Joint& jt = joints[j];
      Require(jt.child == j + 1, ErrorCode::kSchema,
              "joint " + std::to_string(j) + " must have child link " + std::to_string(j + 1));
      Require(jt.parent >= 0 && jt.parent < jt.child && seen[jt.parent], ErrorCode::kSchema,
              "joint '" + jt.name + "' parent must precede its child");
      seen[jt.child] = 1;
      Require(std::isfinite(jt.lower) && std::isfinite(jt.upper) && jt.lower < jt.upper,
              ErrorCode::kSchema, "joint '" + jt.name + "' limits must be finite and ordered");
      Require(jt.torque_limit > 0.0 && std::isfinite(jt.torque_limit) &&
                  jt.velocity_limit > 0.0 && std::isfinite(jt.velocity_limit),
              ErrorCode::kSchema, "joint '" + jt.name + "' limits must be finite and positive");
    }
    for (const FootPoint& f : foot_points)
      Require(f.link >= 0 && f.link < num_links(), ErrorCode::kSchema, "foot point link out of range");
  }
};

// Default 1 m character: torso + two legs of (hip, knee, ankle).
// Joint order: hip_l, knee_l, ankle_l, hip_r, knee_r, ankle_r.
inline Morphology DefaultCharacter() {
  Morphology m;
  m.id = "planar_biped_v1";
  m.height = 1.0;
  m.links.push_back({"torso", 0.45, 10.0, 10.0 * 0.45 * 0.45 / 12.0, Vec2(0.0, 0.2)});
  for (const char* side : {"l", "r"}) {
    const std::string s(side);
    m.links.push_back({"thigh_" + s, 0.25, 3.0, 3.0 * 0.25 * 0.25 / 12.0, Vec2(0.0, -0.125)});
    m.links.push_back({"shank_" + s, 0.25, 2.5, 2.5 * 0.25 * 0.25 / 12.0, Vec2(0.0, -0.125)});
    m.links.push_back({"foot_" + s, 0.16, 1.0, 1.0 * 0.16 * 0.16 / 12.0, Vec2(0.04, -0.025)});
  }
  for (int leg = 0; leg < 2; ++leg) {
    const std::string s = leg == 0 ? "l" : "r";
    const int thigh = 1 + 3 * leg;
    m.joints.push_back({"hip_" + s, 0, thigh, Vec2::Zero(), -0.8, 2.2, 150.0, 20.0, 250.0, 6.0, 0.02});
    m.joints.push_back({"knee_" + s, thigh, thigh + 1, Vec2(0.0, -0.25), -2.5, 0.05, 150.0, 20.0, 200.0, 5.0, 0.02});
    m.joints.push_back({"ankle_" + s, thigh + 1, thigh + 2, Vec2(0.0, -0.25), -0.9, 0.9, 60.0, 20.0, 150.0, 4.0, 0.02});
    m.foot_points.push_back({thigh + 2, Vec2(-0.04, -0.05)});
    m.foot_points.push_back({thigh + 2, Vec2(0.12, -0.05)});
    m.foot_links.push_back(thigh + 2);
  }
  m.Validate();
  return m;
}

// Single pendulum: a massive fixed root and one link with a point mass at L.
inline Morphology PendulumMorphology(double length, double bob_mass = 1.0) {
  Morphology m;
  m.id = "pendulum";
  m.fixed_base = true;
  m.height = length;
  m.links.push_back({"base", 0.1, 1.0, 0.01, Vec2::Zero()});
  m.links.push_back({"rod", length, bob_mass, 0.0, Vec2(0.0, -length)});
  m.joints.push_back({"swing", 0, 1, Vec2::Zero(), -kPi, kPi, 1e6, 1e6, 0.0, 0.0, 0.0});
  m.Validate();
  return m;
}

inline nlohmann::json Vec2Json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }

inline Vec2 Vec2FromJson(const nlohmann::json& j) {
  Require(j.is_array() && j.size() == 2, ErrorCode::kSchema, "expected [x, z] pair");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline nlohmann::json MorphologyToJson(const Morphology& m) {
  nlohmann::json j;
  j["id"] = m.id;
  j["fixed_base"] = m.fixed_base;
  j["height"] = m.height;
  for (const Link& l : m.links)
    j["links"].push_back({{"name", l.name}, {"length", l.length}, {"mass", l.mass},
                          {"inertia", l.inertia}, {"com", Vec2Json(l.com)}});
  for (const Joint& jt : m.joints)
    j["joints"].push_back({{"name", jt.name}, {"parent", jt.parent}, {"child", jt.child},
                           {"anchor", Vec2Json(jt.anchor)}, {"lower", jt.lower}, {"upper", jt.upper},
                           {"torque_limit", jt.torque_limit}, {"velocity_limit", jt.velocity_limit},
                           {"kp", jt.kp}, {"kd", jt.kd}, {"armature", jt.armature}});
  for (const FootPoint& f : m.foot_points)
    j["foot_points"].push_back({{"link", f.link}, {"offset", Vec2Json(f.offset)}});
  j["foot_links"] = m.foot_links;
  return j;
}

inline Morphology MorphologyFromJson(const nlohmann::json& j) {
  try {
    Morphology m;
    m.id = j.at("id").get<std::string>();
    m.fixed_base = j.value("fixed_base", false);
    m.height = j.value("height", 1.0);
    for (const auto& l : j.at("links"))
      m.links.push_back({l.at("name").get<std::string>(), l.value("length", 0.0),
                         l.at("mass").get<double>(), l.at("inertia").get<double>(),
                         Vec2FromJson(l.at("com"))});
    for (const auto& jt : j.at("joints")) {
      Joint x;
      x.name = jt.at("name").get<std::string>();
      x.parent = jt.at("parent").get<int>();
      x.child = jt.at("child").get<int>();
      x.anchor = Vec2FromJson(jt.at("anchor"));
      x.lower = jt.at("lower").get<double>();
      x.upper = jt.at("upper").get<double>();
      x.torque_limit = jt.at("torque_limit").get<double>();
      x.velocity_limit = jt.at("velocity_limit").get<double>();
      x.kp = jt.at("kp").get<double>();
      x.kd = jt.at("kd").get<double>();
      x.armature = jt.value("armature", 0.0);
      m.joints.push_back(x);
    }
    if (j.contains("foot_points"))
      for (const auto& f : j.at("foot_points"))
        m.foot_points.push_back({f.at("link").get<int>(), Vec2FromJson(f.at("offset"))});
    if (j.contains("foot_links")) m.foot_links = j.at("foot_links").get<std::vector<int>>();
    m.Validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchema, std::string("morphology: ") + e.what());
  }
}

inline Morphology LoadMorphology(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open morphology file " + path);
  try {
    return MorphologyFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParse, path + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline void SaveMorphology(const Morphology& m, const std::string& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot write " + path);
  out << MorphologyToJson(m).dump(2) << "\n";
}

}  // namespace keytrack::sim

#endif  // KEYTRACK_SIM_MORPHOLOGY_HPP_
