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

#ifndef KEYTRACK_COMMON_RANDOM_HPP_
#define KEYTRACK_COMMON_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace keytrack {

using Rng = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a key path,
// e.g. DeriveSeed(master, {kRollout, env_index}).
inline std::uint64_t DeriveSeed(std::uint64_t master,
                                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = SplitMix64(master);
  for (std::uint64_t k : keys) h = SplitMix64(h ^ SplitMix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng MakeRng(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return Rng(DeriveSeed(master, keys));
}

inline double Uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Box-Muller on raw engine output so draws do not depend on distribution
// object state.
inline double StandardNormal(Rng& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  double u1 = static_cast<double>(rng() >> 11) * kScale;
  double u2 = static_cast<double>(rng() >> 11) * kScale;
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace keytrack

#endif  // KEYTRACK_COMMON_RANDOM_HPP_
