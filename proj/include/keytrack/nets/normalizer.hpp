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

#ifndef KEYTRACK_NETS_NORMALIZER_HPP_
#define KEYTRACK_NETS_NORMALIZER_HPP_

#include <algorithm>
#include <cmath>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::nets {

// Running mean / variance of observation features. Once frozen, the
// mapping is a fixed affine transform followed by clipping.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(int dim, double clip = 5.0, double eps = 1e-8)
      : mean_(VecX::Zero(dim)), var_(VecX::Ones(dim)), count_(0.0), clip_(clip), eps_(eps) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  bool frozen() const { return frozen_; }
  void Freeze() { frozen_ = true; }
  void Unfreeze() { frozen_ = false; }
  double count() const { return count_; }
  const VecX& mean() const { return mean_; }
  const VecX& var() const { return var_; }

  void SetStats(const VecX& mean, const VecX& var, double count) {
    Require(mean.size() == mean_.size() && var.size() == var_.size(), ErrorCode::kDimensionMismatch,
            "normalizer statistics have wrong size");
    mean_ = mean;
    var_ = var;
    count_ = count;
  }

  // Merges a batch (columns are samples) with the parallel-variance rule.
  void Update(const MatX& batch) {
    if (frozen_ || batch.cols() == 0) return;
    Require(batch.rows() == dim(), ErrorCode::kDimensionMismatch, "normalizer batch has wrong feature size");
    const double n = static_cast<double>(batch.cols());
    const VecX bmean = batch.rowwise().mean();
    const VecX bvar = (batch.colwise() - bmean).array().square().rowwise().sum() / n;
    const double total = count_ + n;
    const VecX delta = bmean - mean_;
    const VecX m2 = var_ * count_ + bvar * n + delta.cwiseProduct(delta) * (count_ * n / total);
    mean_ += delta * (n / total);
    var_ = m2 / total;
    count_ = total;
  }

  VecX Normalize(const VecX& x) const {
    Require(x.size() == dim(), ErrorCode::kDimensionMismatch, "observation has wrong size for the normalizer");
    VecX out(dim());
    for (int i = 0; i < dim(); ++i)
      out[i] = std::clamp((x[i] - mean_[i]) / std::sqrt(var_[i] + eps_), -clip_, clip_);
    return out;
  }

 private:
  VecX mean_, var_;
  double count_ = 0.0;
  double clip_ = 5.0;
  double eps_ = 1e-8;
  bool frozen_ = false;
};

}  // namespace keytrack::nets

#endif  // KEYTRACK_NETS_NORMALIZER_HPP_
