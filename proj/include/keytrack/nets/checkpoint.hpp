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

#ifndef KEYTRACK_NETS_CHECKPOINT_HPP_
#define KEYTRACK_NETS_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "keytrack/common/error.hpp"
#include "keytrack/common/hash.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::nets {

inline constexpr char kCheckpointMagic[8] = {'K', 'T', 'R', 'K', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Named parameter tensors plus the configuration that produced them.
// Tensors are stored as raw little-endian doubles, so a round trip is exact.
struct Checkpoint {
  std::string config_hash;
  std::string config_json;
  std::map<std::string, VecX> tensors;
  std::map<std::string, std::string> meta;

  const VecX& Get(const std::string& name) const {
    const auto it = tensors.find(name);
    Require(it != tensors.end(), ErrorCode::kSchema, "checkpoint lacks tensor '" + name + "'");
    return it->second;
  }
  bool Has(const std::string& name) const { return tensors.count(name) > 0; }
  const std::string& Meta(const std::string& key) const {
    const auto it = meta.find(key);
    Require(it != meta.end(), ErrorCode::kSchema, "checkpoint lacks metadata '" + key + "'");
    return it->second;
  }

  // SHA-256 over the names and bytes of every tensor whose name starts
  // with `prefix`, in name order.
  std::string TensorHash(const std::string& prefix = "") const {
    Sha256 h;
    for (const auto& [name, v] : tensors) {
      if (name.rfind(prefix, 0) != 0) continue;
      h.Update(name);
      h.Update(std::string(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size()));
    }
    return h.HexDigest();
  }
};

namespace detail {

inline void WriteU64(std::ostream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), sizeof v); }
inline void WriteString(std::ostream& o, const std::string& s) {
  WriteU64(o, s.size());
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::uint64_t ReadU64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  Require(static_cast<bool>(in), ErrorCode::kParse, "checkpoint is truncated");
  return v;
}
inline std::string ReadString(std::istream& in, std::uint64_t limit) {
  const std::uint64_t n = ReadU64(in);
  Require(n <= limit, ErrorCode::kParse, "checkpoint string length is implausible");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  Require(static_cast<bool>(in), ErrorCode::kParse, "checkpoint is truncated");
  return s;
}

}  // namespace detail

inline std::string SerializeCheckpoint(const Checkpoint& c) {
  std::ostringstream o(std::ios::binary);
  o.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::WriteU64(o, kCheckpointVersion);
  detail::WriteString(o, c.config_hash);
  detail::WriteString(o, c.config_json);
  detail::WriteU64(o, c.meta.size());
  for (const auto& [k, v] : c.meta) {
    detail::WriteString(o, k);
    detail::WriteString(o, v);
  }
  detail::WriteU64(o, c.tensors.size());
  for (const auto& [name, v] : c.tensors) {
    detail::WriteString(o, name);
    detail::WriteU64(o, static_cast<std::uint64_t>(v.size()));
    o.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  }
  return o.str();
}

inline Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  constexpr std::uint64_t kLimit = 1ull << 32;
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  Require(static_cast<bool>(in) && std::memcmp(magic, kCheckpointMagic, sizeof magic) == 0, ErrorCode::kParse,
          "not a checkpoint file (bad magic)");
  const std::uint64_t version = detail::ReadU64(in);
  Require(version == kCheckpointVersion, ErrorCode::kSchema,
          "checkpoint version " + std::to_string(version) + " is not supported");
  Checkpoint c;
  c.config_hash = detail::ReadString(in, kLimit);
  c.config_json = detail::ReadString(in, kLimit);
  const std::uint64_t nmeta = detail::ReadU64(in);
  for (std::uint64_t i = 0; i < nmeta; ++i) {
    std::string k = detail::ReadString(in, kLimit);
    c.meta[k] = detail::ReadString(in, kLimit);
  }
  const std::uint64_t n = detail::ReadU64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = detail::ReadString(in, kLimit);
    const std::uint64_t len = detail::ReadU64(in);
    Require(len <= kLimit, ErrorCode::kParse, "checkpoint tensor length is implausible");
    VecX v(static_cast<Eigen::Index>(len));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * len));
    Require(static_cast<bool>(in), ErrorCode::kParse, "checkpoint is truncated");
    c.tensors[name] = std::move(v);
  }
  return c;
}

inline void SaveCheckpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
  const std::string bytes = SerializeCheckpoint(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(out), ErrorCode::kIo, "failed writing checkpoint '" + path + "'");
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kDependency, "checkpoint '" + path + "' does not exist");
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeCheckpoint(buf.str());
}

}  // namespace keytrack::nets

#endif  // KEYTRACK_NETS_CHECKPOINT_HPP_
