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

#ifndef KEYTRACK_TRAINER_GAE_HPP_
#define KEYTRACK_TRAINER_GAE_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::train {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // value targets: advantage + value
};

// Generalized advantage estimation over one environment's sequence.
// next_values[t] is V(s_{t+1}) when s_{t+1} continues the episode (or
// bootstraps a truncated one) and 0 after a terminal transition; done[t]
// cuts the lambda-chain at episode boundaries.
inline GaeResult ComputeGae(const std::vector<double>& rewards, const std::vector<double>& values,
                            const std::vector<double>& next_values, const std::vector<std::uint8_t>& done,
                            double gamma, double lambda) {
  const std::size_t n = rewards.size();
  Require(values.size() == n && next_values.size() == n && done.size() == n, ErrorCode::kDimensionMismatch,
          "GAE inputs differ in length");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_values[i] - values[i];
    const double carry = done[i] ? 0.0 : gamma * lambda * next_adv;
    r.advantages[i] = delta + carry;
    r.returns[i] = r.advantages[i] + values[i];
    next_adv = r.advantages[i];
  }
  return r;
}

// Zero-mean / unit-variance version of a stream; a stream with (near) zero
// variance carries no preference and maps to zeros.
inline VecX Standardize(const VecX& x) {
  if (x.size() == 0) return x;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 1e-12)) return VecX::Zero(x.size());
  return (x.array() - mean) / std::sqrt(var);
}

// A = w_sparse * std(A_sparse) + w_dense * std(A_dense).
inline VecX AggregateAdvantages(const VecX& adv_sparse, const VecX& adv_dense, double w_sparse, double w_dense) {
  Require(adv_sparse.size() == adv_dense.size(), ErrorCode::kDimensionMismatch, "advantage streams differ in size");
  return w_sparse * Standardize(adv_sparse) + w_dense * Standardize(adv_dense);
}

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_GAE_HPP_
