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

#ifndef KEYTRACK_EVAL_METRICS_HPP_
#define KEYTRACK_EVAL_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "keytrack/common/error.hpp"
#include "keytrack/common/math.hpp"

namespace keytrack::eval {

inline constexpr double kMetersToMm = 1000.0;

// Success iff every keyframe was reached and the largest mean-body error
// stays strictly below the threshold. A missing entry (episode ended before
// that keyframe) is a failure.
inline bool SuccessCriterion(const std::vector<std::optional<double>>& keyframe_errors, double threshold) {
  if (keyframe_errors.empty()) return false;
  for (const auto& e : keyframe_errors)
    if (!e || !(*e < threshold)) return false;
  return true;
}

// Per-tick samples of one evaluated episode, used for plots.
struct EpisodeTrace {
  std::vector<double> phi;
  std::vector<double> dphi;  // commanded phase interval
  std::vector<double> delta_action_norm;  // |dphi_delta * a_delta|
};

struct EpisodeReport {
  double psi = 0.0;
  std::string band;
  std::uint64_t seed = 0;  // episode seed
  std::uint64_t seed_group = 0;  // evaluation seed the episode belongs to
  bool success = false;
  double e_g_bpe_sparse_mm = 0.0;  // NaN when no keyframe was reached
  double e_l_bpe_dense_mm = 0.0;
  double e_smth_dense = 0.0;  // rad/s^2
  int length = 0;  // control ticks
  std::string termination;
  int keyframes_hit = 0;
  int keyframes_expected = 0;
  double max_keyframe_error_m = 0.0;
  double mean_flight_dphi = std::numeric_limits<double>::quiet_NaN();
  EpisodeTrace trace;

  nlohmann::json ToJson() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"psi", psi},
            {"band", band},
            {"seed", seed},
            {"eval_seed", seed_group},
            {"success", success},
            {"E_g_bpe_sparse_mm", num(e_g_bpe_sparse_mm)},
            {"E_l_bpe_dense_mm", num(e_l_bpe_dense_mm)},
            {"E_smth_dense", num(e_smth_dense)},
            {"length", length},
            {"termination", termination},
            {"keyframes_hit", keyframes_hit},
            {"keyframes_expected", keyframes_expected},
            {"max_keyframe_error_m", num(max_keyframe_error_m)},
            {"mean_flight_dphi", num(mean_flight_dphi)}};
  }
};

// Accumulates the episode metrics tick by tick.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t n_keyframes) : key_errors_(n_keyframes) {}

  // Mark keyframes that lie at or before the start phase as not expected.
  void SkipKeyframe(std::size_t i) { skipped_.push_back(i); }

  void AddTick(double local_error_m, const VecX& joint_acc) {
    local_sum_ += local_error_m;
    smooth_sum_ += joint_acc.size() > 0 ? joint_acc.cwiseAbs().mean() : 0.0;
    ++ticks_;
  }

  void AddKeyframe(std::size_t i, double error_m) {
    Require(i < key_errors_.size(), ErrorCode::kOutOfRange, "keyframe index out of range");
    key_errors_[i] = error_m;
  }

  void AddFlightInterval(double dphi) {
    flight_sum_ += dphi;
    ++flight_ticks_;
  }

  EpisodeReport Finish(double threshold, const std::string& termination) const {
    EpisodeReport r;
    r.termination = termination;
    r.length = ticks_;
    std::vector<std::optional<double>> expected;
    double sum = 0.0;
    for (std::size_t i = 0; i < key_errors_.size(); ++i) {
      if (std::find(skipped_.begin(), skipped_.end(), i) != skipped_.end()) continue;
      expected.push_back(key_errors_[i]);
      if (key_errors_[i]) {
        sum += *key_errors_[i];
        r.max_keyframe_error_m = std::max(r.max_keyframe_error_m, *key_errors_[i]);
        ++r.keyframes_hit;
      }
    }
    r.keyframes_expected = static_cast<int>(expected.size());
    r.success = SuccessCriterion(expected, threshold);
    r.e_g_bpe_sparse_mm =
        r.keyframes_hit > 0 ? kMetersToMm * sum / r.keyframes_hit : std::numeric_limits<double>::quiet_NaN();
    r.e_l_bpe_dense_mm = ticks_ > 0 ? kMetersToMm * local_sum_ / ticks_ : 0.0;
    r.e_smth_dense = ticks_ > 0 ? smooth_sum_ / ticks_ : 0.0;
    if (flight_ticks_ > 0) r.mean_flight_dphi = flight_sum_ / flight_ticks_;
    return r;
  }

 private:
  std::vector<std::optional<double>> key_errors_;
  std::vector<std::size_t> skipped_;
  double local_sum_ = 0.0;
  double smooth_sum_ = 0.0;
  int ticks_ = 0;
  double flight_sum_ = 0.0;
  int flight_ticks_ = 0;
};

// Mean and sample standard deviation; NaN entries are ignored.
struct Stat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  int count = 0;
};

inline Stat MeanStd(const std::vector<double>& xs) {
  Stat s;
  double sum = 0.0;
  for (double x : xs)
    if (std::isfinite(x)) {
      sum += x;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / s.count;
  double ss = 0.0;
  for (double x : xs)
    if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
  s.std = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  return s;
}

}  // namespace keytrack::eval

#endif  // KEYTRACK_EVAL_METRICS_HPP_
