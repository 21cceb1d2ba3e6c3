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

#ifndef KEYTRACK_NETS_MLP_HPP_
#define KEYTRACK_NETS_MLP_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"

namespace keytrack::nets {

enum class Activation { kElu, kTanh, kIdentity };

inline double Activate(Activation a, double x) {
  switch (a) {
    case Activation::kElu: return x > 0.0 ? x : std::expm1(x);
    case Activation::kTanh: return std::tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

// Derivative expressed through the pre-activation x and output y.
inline double ActivateGrad(Activation a, double x, double y) {
  switch (a) {
    case Activation::kElu: return x > 0.0 ? 1.0 : y + 1.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

// Activations kept by a forward pass for the matching backward pass. Columns
// are batch samples.
struct ForwardCache {
  std::uint64_t version = 0;
  std::vector<MatX> inputs;  // input to each layer
  std::vector<MatX> pre;  // pre-activation of each hidden layer
};

// Fully connected network with hidden activations and a linear output
// layer. Parameters live in one flat vector laid out layer by layer as
// [W (out x in, column-major), b (out)].
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<int> sizes, Activation hidden = Activation::kElu) : sizes_(std::move(sizes)), act_(hidden) {
    Require(sizes_.size() >= 2, ErrorCode::kInvalidArgument, "an MLP needs input and output sizes");
    for (int s : sizes_) Require(s > 0, ErrorCode::kInvalidArgument, "layer sizes must be positive");
    int n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(n);
      n += (sizes_[l] + 1) * sizes_[l + 1];
    }
    params_ = VecX::Zero(n);
  }

  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int num_params() const { return static_cast<int>(params_.size()); }
  std::uint64_t version() const { return version_; }

  const VecX& params() const { return params_; }
  void set_params(const VecX& p) {
    Require(p.size() == params_.size(), ErrorCode::kDimensionMismatch, "parameter vector has wrong size");
    params_ = p;
    ++version_;
  }
  // Mutable access invalidates every cache taken before the call.
  VecX& mutable_params() {
    ++version_;
    return params_;
  }

  Eigen::Map<const MatX> W(int l) const {
    return Eigen::Map<const MatX>(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<const VecX> b(int l) const {
    return Eigen::Map<const VecX>(params_.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], sizes_[l + 1]);
  }
  int weight_offset(int l) const { return offsets_[l]; }
  int bias_offset(int l) const { return offsets_[l] + sizes_[l] * sizes_[l + 1]; }

  // Gaussian init with std gain / sqrt(fan_in) and zero biases; the output
  // layer uses `out_gain` instead.
  void Initialize(Rng& rng, double gain = 1.0, double out_gain = 1.0) {
    for (int l = 0; l < num_layers(); ++l) {
      const double g = (l == num_layers() - 1 ? out_gain : gain) / std::sqrt(static_cast<double>(sizes_[l]));
      for (int i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) params_[offsets_[l] + i] = g * StandardNormal(rng);
      for (int i = 0; i < sizes_[l + 1]; ++i) params_[bias_offset(l) + i] = 0.0;
    }
    ++version_;
  }

  MatX Forward(const MatX& x, ForwardCache* cache = nullptr) const {
    Require(x.rows() == in_dim(), ErrorCode::kDimensionMismatch,
            "network expects input of size " + std::to_string(in_dim()) + ", got " + std::to_string(x.rows()));
    Require(x.allFinite(), ErrorCode::kInvalidArgument, "network input is not finite");
    if (cache != nullptr) {
      cache->version = version_;
      cache->inputs.clear();
      cache->pre.clear();
    }
    MatX h = x;
    for (int l = 0; l < num_layers(); ++l) {
      MatX z = W(l) * h;
      z.colwise() += b(l);
      if (cache != nullptr) cache->inputs.push_back(h);
      if (l + 1 < num_layers()) {
        if (cache != nullptr) cache->pre.push_back(z);
        h = z.unaryExpr([this](double v) { return Activate(act_, v); });
      } else {
        h = std::move(z);
      }
    }
    return h;
  }

  VecX Forward(const VecX& x) const { return Forward(MatX(x)).col(0); }

  // Accumulates dL/dparams (summed over the batch) into `param_grad` and
  // returns dL/dinput.
  MatX Backward(const ForwardCache& cache, const MatX& out_grad, VecX* param_grad) const {
    Require(cache.version == version_ && static_cast<int>(cache.inputs.size()) == num_layers(),
            ErrorCode::kStaleCache, "backward pass uses a cache from different parameters");
    Require(out_grad.rows() == out_dim() && out_grad.cols() == cache.inputs.front().cols(),
            ErrorCode::kDimensionMismatch, "output gradient has wrong shape");
    if (param_grad != nullptr) {
      if (param_grad->size() == 0) *param_grad = VecX::Zero(num_params());
      Require(param_grad->size() == num_params(), ErrorCode::kDimensionMismatch, "gradient buffer has wrong size");
    }
    MatX g = out_grad;
    for (int l = num_layers() - 1; l >= 0; --l) {
      if (l + 1 < num_layers()) {
        const MatX& z = cache.pre[l];
        const MatX& y = cache.inputs[l + 1];
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] *= ActivateGrad(act_, z.data()[i], y.data()[i]);
      }
      if (param_grad != nullptr) {
        Eigen::Map<MatX>(param_grad->data() + weight_offset(l), sizes_[l + 1], sizes_[l]).noalias() +=
            g * cache.inputs[l].transpose();
        Eigen::Map<VecX>(param_grad->data() + bias_offset(l), sizes_[l + 1]) += g.rowwise().sum();
      }
      g = W(l).transpose() * g;
    }
    return g;
  }

 private:
  std::vector<int> sizes_;
  Activation act_ = Activation::kElu;
  std::vector<int> offsets_;
  VecX params_;
  std::uint64_t version_ = 0;
};

}  // namespace keytrack::nets

#endif  // KEYTRACK_NETS_MLP_HPP_
