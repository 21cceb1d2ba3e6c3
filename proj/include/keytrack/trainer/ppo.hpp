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

#ifndef KEYTRACK_TRAINER_PPO_HPP_
#define KEYTRACK_TRAINER_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"
#include "keytrack/common/random.hpp"
#include "keytrack/nets/adam.hpp"
#include "keytrack/nets/gaussian.hpp"
#include "keytrack/nets/mlp.hpp"

namespace keytrack::train {

struct PolicyLoss {
  double loss = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;
  double kl = 0.0;  // mean KL(old || new) over the batch
  double clip_frac = 0.0;
  VecX grad;  // flat gradient w.r.t. [mlp params, log_std]
};

// Clipped-surrogate loss with entropy bonus for one minibatch. Columns of
// `inputs` / `actions` are samples; `old_mean` / `old_log_std` describe the
// behaviour policy for the KL diagnostic.
inline PolicyLoss ClippedSurrogate(const nets::GaussianHead& head, const MatX& inputs, const MatX& actions,
                                   const VecX& old_logp, const VecX& adv, const MatX& old_mean,
                                   const VecX& old_log_std, double clip, double entropy_coef) {
  const int batch = static_cast<int>(inputs.cols());
  const int d = head.act_dim();
  Require(actions.rows() == d && actions.cols() == batch && old_logp.size() == batch && adv.size() == batch,
          ErrorCode::kDimensionMismatch, "policy minibatch has inconsistent shapes");
  nets::ForwardCache cache;
  const MatX mean = head.Mean(inputs, &cache);
  const VecX log_std = head.log_std();
  const VecX inv_var = (-2.0 * log_std).array().exp();
  PolicyLoss out;
  MatX dmean = MatX::Zero(d, batch);
  VecX dlog_std = VecX::Zero(d);
  int clipped = 0;
  for (int i = 0; i < batch; ++i) {
    double logp = 0.0;
    for (int k = 0; k < d; ++k) {
      const double z = (actions(k, i) - mean(k, i)) * std::exp(-log_std[k]);
      logp += -0.5 * z * z - log_std[k] - nets::kHalfLog2Pi;
    }
    const double ratio = std::exp(logp - old_logp[i]);
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double unclipped_obj = ratio * adv[i];
    const double clipped_obj = clipped_ratio * adv[i];
    out.surrogate += std::min(unclipped_obj, clipped_obj);
    if (std::abs(ratio - 1.0) > clip) ++clipped;
    if (unclipped_obj <= clipped_obj) {
      // d(-ratio * A)/d logp = -ratio * A, spread over mean and log_std.
      const double g = -ratio * adv[i] / batch;
      for (int k = 0; k < d; ++k) {
        const double diff = actions(k, i) - mean(k, i);
        dmean(k, i) += g * diff * inv_var[k];
        dlog_std[k] += g * (diff * diff * inv_var[k] - 1.0);
      }
    }
    double kl = 0.0;
    for (int k = 0; k < d; ++k) {
      const double so2 = std::exp(2.0 * old_log_std[k]);
      const double dm = old_mean(k, i) - mean(k, i);
      kl += log_std[k] - old_log_std[k] + (so2 + dm * dm) * 0.5 * inv_var[k] - 0.5;
    }
    out.kl += kl;
  }
  out.surrogate /= batch;
  out.kl /= batch;
  out.clip_frac = static_cast<double>(clipped) / batch;
  out.entropy = head.Entropy();
  out.loss = -out.surrogate - entropy_coef * out.entropy;
  dlog_std.array() -= entropy_coef;
  VecX mlp_grad = VecX::Zero(head.mlp().num_params());
  head.mlp().Backward(cache, head.output_scale() * dmean, &mlp_grad);
  out.grad.resize(head.num_params());
  out.grad << mlp_grad, dlog_std;
  return out;
}

// Penalty coef * mean ||mu(x + eps) - mu(x)||^2 with fixed perturbations;
// gradient added into `grad` (w.r.t. the head's flat parameters).
inline double LipschitzPenalty(const nets::GaussianHead& head, const MatX& inputs, const MatX& noise, double coef,
                               VecX& grad) {
  nets::ForwardCache c0, c1;
  const MatX m0 = head.Mean(inputs, &c0);
  const MatX m1 = head.Mean(inputs + noise, &c1);
  const MatX diff = m1 - m0;
  const double batch = static_cast<double>(inputs.cols());
  const double loss = coef * diff.squaredNorm() / batch;
  const MatX g = (2.0 * coef / batch) * head.output_scale() * diff;
  VecX mlp_grad = VecX::Zero(head.mlp().num_params());
  head.mlp().Backward(c1, g, &mlp_grad);
  head.mlp().Backward(c0, -g, &mlp_grad);
  grad.head(mlp_grad.size()) += mlp_grad;
  return loss;
}

struct ValueLoss {
  double loss = 0.0;
  VecX grad;
};

// coef * 0.5 * mean (V(x) - target)^2
inline ValueLoss ValueRegression(const nets::Mlp& v, const MatX& inputs, const VecX& targets, double coef) {
  nets::ForwardCache cache;
  const MatX pred = v.Forward(inputs, &cache);
  const double batch = static_cast<double>(inputs.cols());
  const VecX err = pred.row(0).transpose() - targets;
  ValueLoss out;
  out.loss = coef * 0.5 * err.squaredNorm() / batch;
  out.grad = VecX::Zero(v.num_params());
  v.Backward(cache, (coef / batch) * err.transpose(), &out.grad);
  return out;
}

// Applies one clipped Adam step to a head or network.
inline void ApplyHead(nets::GaussianHead& head, nets::Adam& opt, VecX grad, double lr, double max_norm) {
  nets::ClipGradNorm(grad, max_norm);
  head.SetFlat(head.GetFlat() + opt.Step(grad, lr));
}

inline void ApplyMlp(nets::Mlp& net, nets::Adam& opt, VecX grad, double lr, double max_norm) {
  nets::ClipGradNorm(grad, max_norm);
  net.set_params(net.params() + opt.Step(grad, lr));
}

// Halve above 2x target, double below target/2, clamp.
inline double AdaptLearningRate(double lr, double kl, double desired, double lr_min, double lr_max) {
  if (kl > 2.0 * desired) lr *= 0.5;
  else if (kl < 0.5 * desired) lr *= 2.0;
  return std::clamp(lr, lr_min, lr_max);
}

// Deterministic minibatch partition of [0, n).
inline std::vector<std::vector<int>> Minibatches(int n, int count, Rng& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> out(count);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i) * count / n].push_back(perm[i]);
  return out;
}

inline MatX Columns(const MatX& m, const std::vector<int>& idx) {
  MatX out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(i) = m.col(idx[i]);
  return out;
}

inline VecX Entries(const VecX& v, const std::vector<int>& idx) {
  VecX out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace keytrack::train

#endif  // KEYTRACK_TRAINER_PPO_HPP_
