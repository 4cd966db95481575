// Copyright 2026 The loopdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LOOPDET_METRICS_H
#define LOOPDET_METRICS_H

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "loopdet/response.h"

namespace loopdet {

/// The conditioning event (k clicks) has zero prior probability.
class UndefinedEvent : public std::domain_error {
 public:
  explicit UndefinedEvent(const std::string &what) : std::domain_error(what) {}
};

/// Posterior probability that a k-click event came from the k-photon
/// component of the prior: w(k|k) rho(k) / sum_n w(k|n) rho(n).
///
/// Throws std::invalid_argument when k lies outside the prior's truncation or
/// the matrix's click range, and UndefinedEvent when the event cannot occur.
double confidence(const ResponseMatrix &w, const PhotonNumberDistribution &prior, int k);

/// Excess loss 1 - t_r - t_c held fixed; t_r follows t_c.
struct FixedExcessLoss {
  double excess_loss = 0.0;
};

/// t_r held fixed; t_c ranges over (0, 1 - t_r].
struct FixedRoundtrip {
  double t_r = 0.0;
};

using LossPolicy = std::variant<FixedExcessLoss, FixedRoundtrip>;

struct CouplingSample {
  double t_c;
  double confidence;
};

struct CouplingOptimum {
  double t_c = 0.0;
  double confidence = 0.0;
  /// More than one grid point attains the maximum; no refinement is done and
  /// the lowest such t_c is reported.
  bool plateau = false;
  /// Grid samples where the confidence is defined, ascending in t_c.
  std::vector<CouplingSample> curve;
};

/// Detector parameters implied by a coupling value under a loss policy.
DetectorParams apply_coupling(const DetectorParams &base, const LossPolicy &policy, double t_c);

/// Largest admissible t_c under the policy.
double max_coupling(const LossPolicy &policy);

/// Maximizes confidence(k) over t_c: a uniform grid of `grid_points` values
/// on (0, t_c_max], then golden-section refinement inside the bracket around
/// the best grid point. t_c and t_r of `base` are replaced per the policy.
CouplingOptimum optimize_coupling(const DetectorParams &base, const PhotonNumberDistribution &prior,
                                  int k, const LossPolicy &policy, int grid_points = 200);

}  // namespace loopdet

#endif  // LOOPDET_METRICS_H
