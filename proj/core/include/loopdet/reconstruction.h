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

#ifndef LOOPDET_RECONSTRUCTION_H
#define LOOPDET_RECONSTRUCTION_H

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "loopdet/response.h"
#include "loopdet/simulator.h"

namespace loopdet {

inline constexpr double kDefaultSvThreshold = 1e-8;

/// Linear estimate of rho(n) from observed click frequencies. Entries are
/// signed; no positivity constraint is imposed.
struct ReconstructionResult {
  std::vector<double> rho_hat;
  std::vector<double> std_errors;
  /// Standard error of sum_n rho_hat(n).
  double sum_std_error = 0.0;
  int n_max = 0;
  double sv_threshold = kDefaultSvThreshold;
  double residual_norm = 0.0;
  int numerical_rank = 0;
  bool rank_deficient = false;
  /// Trials behind the frequencies; empty for exact probabilities.
  std::optional<std::uint64_t> trials;

  /// rho_hat with negative entries set to zero and the rest renormalized.
  std::vector<double> clipped() const;
};

struct ConditioningReport {
  std::vector<double> singular_values;  ///< descending
  double condition_number = 0.0;        ///< over retained singular values
  int numerical_rank = 0;
  bool invertible = false;
  double sv_threshold = kDefaultSvThreshold;
};

/// Truncated-SVD pseudo-inverse: singular values below
/// sv_threshold * sigma_max are dropped.
Eigen::MatrixXd pseudo_inverse(const ResponseMatrix &w, double sv_threshold);

/// Standard errors of W+ p_hat under multinomial sampling of p_hat over
/// `trials` repetitions. Zero when every outcome is the same.
std::vector<double> estimate_errors(const Eigen::MatrixXd &w_pinv,
                                    std::span<const double> frequencies, std::uint64_t trials);

/// Solves p_hat = W rho in the least-squares sense over all k = 0..L.
ReconstructionResult reconstruct_svd(const ResponseMatrix &w, const CountHistogram &hist,
                                     double sv_threshold = kDefaultSvThreshold);

/// Same, from exact probabilities (the infinite-trials limit). Errors are
/// propagated only when `trials` is given.
ReconstructionResult reconstruct_svd(const ResponseMatrix &w, std::span<const double> probs,
                                     std::optional<std::uint64_t> trials,
                                     double sv_threshold = kDefaultSvThreshold);

/// Singular-value spectrum of W; invertible means full column rank at the
/// given relative threshold.
ConditioningReport condition_diagnostics(const ResponseMatrix &w,
                                         double sv_threshold = kDefaultSvThreshold);

}  // namespace loopdet

#endif  // LOOPDET_RECONSTRUCTION_H
