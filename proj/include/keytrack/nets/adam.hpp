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

#ifndef KEYTRACK_NETS_ADAM_HPP_
#define KEYTRACK_NETS_ADAM_HPP_

#include <cmath>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::nets {

// Adam over one flat parameter vector. The learning rate is passed per
// step so that schedules stay outside the optimizer.
class Adam {
 public:
  Adam() = default;
  explicit Adam(int n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(VecX::Zero(n)), v_(VecX::Zero(n)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  int size() const { return static_cast<int>(m_.size()); }
  long steps() const { return t_; }
  const VecX& m() const { return m_; }
  const VecX& v() const { return v_; }
  void SetState(const VecX& m, const VecX& v, long t) {
    Require(m.size() == m_.size() && v.size() == v_.size(), ErrorCode::kDimensionMismatch,
            "optimizer state has wrong size");
    m_ = m;
    v_ = v;
    t_ = t;
  }

  // Returns the parameter increment for gradient `g` (descent direction).
  VecX Step(const VecX& g, double lr) {
    Require(g.size() == m_.size(), ErrorCode::kDimensionMismatch, "gradient has wrong size for the optimizer");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * g;
    v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    return -lr * (m_ / c1).cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps_).matrix());
  }

 private:
  VecX m_, v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

// Rescales g in place so that its norm is at most max_norm; returns the
// norm before clipping.
inline double ClipGradNorm(VecX& g, double max_norm) {
  const double n = g.norm();
  if (max_norm > 0.0 && n > max_norm) g *= max_norm / n;
  return n;
}

}  // namespace keytrack::nets

#endif  // KEYTRACK_NETS_ADAM_HPP_
