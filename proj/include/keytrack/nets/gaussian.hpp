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

#ifndef KEYTRACK_NETS_GAUSSIAN_HPP_
#define KEYTRACK_NETS_GAUSSIAN_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"
#include "keytrack/nets/mlp.hpp"

namespace keytrack::nets {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;
inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * kPi);

struct ActionSample {
  VecX action;
  double log_prob = 0.0;
};

// Diagonal Gaussian policy: mean = output_scale * mlp(obs), with a
// state-independent per-dimension log standard deviation.
class GaussianHead {
 public:
  GaussianHead() = default;
  GaussianHead(std::vector<int> sizes, double init_log_std, double output_scale = 1.0)
      : mlp_(std::move(sizes)), output_scale_(output_scale) {
    log_std_ = VecX::Constant(mlp_.out_dim(), std::clamp(init_log_std, kLogStdMin, kLogStdMax));
  }

  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  int act_dim() const { return mlp_.out_dim(); }
  int obs_dim() const { return mlp_.in_dim(); }
  double output_scale() const { return output_scale_; }
  const VecX& log_std() const { return log_std_; }
  void set_log_std(const VecX& v) {
    Require(v.size() == log_std_.size(), ErrorCode::kDimensionMismatch, "log_std has wrong size");
    log_std_ = v.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  }
  VecX std() const { return log_std_.array().exp(); }

  MatX Mean(const MatX& obs, ForwardCache* cache = nullptr) const { return output_scale_ * mlp_.Forward(obs, cache); }
  VecX Mean(const VecX& obs) const { return output_scale_ * mlp_.Forward(obs); }

  double LogProb(const VecX& mean, const VecX& action) const {
    double lp = 0.0;
    for (int i = 0; i < act_dim(); ++i) {
      const double z = (action[i] - mean[i]) / std::exp(log_std_[i]);
      lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
    }
    return lp;
  }

  // Closed form, depends on log_std only.
  double Entropy() const { return log_std_.sum() + act_dim() * (0.5 + kHalfLog2Pi); }

  ActionSample Sample(const VecX& obs, Rng& rng, bool deterministic) const {
    ActionSample s;
    const VecX mean = Mean(obs);
    s.action = mean;
    if (!deterministic)
      for (int i = 0; i < act_dim(); ++i) s.action[i] += std::exp(log_std_[i]) * StandardNormal(rng);
    s.log_prob = LogProb(mean, s.action);
    return s;
  }

  // Flat view: [mlp params, log_std].
  int num_params() const { return mlp_.num_params() + static_cast<int>(log_std_.size()); }
  VecX GetFlat() const {
    VecX out(num_params());
    out << mlp_.params(), log_std_;
    return out;
  }
  void SetFlat(const VecX& flat) {
    Require(flat.size() == num_params(), ErrorCode::kDimensionMismatch, "flat parameter vector has wrong size");
    mlp_.set_params(flat.head(mlp_.num_params()));
    set_log_std(flat.tail(log_std_.size()));
  }

 private:
  Mlp mlp_;
  VecX log_std_;
  double output_scale_ = 1.0;
};

}  // namespace keytrack::nets

#endif  // KEYTRACK_NETS_GAUSSIAN_HPP_
