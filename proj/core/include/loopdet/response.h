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

#ifndef LOOPDET_RESPONSE_H
#define LOOPDET_RESPONSE_H

#include <span>
#include <vector>

#include "loopdet/detector.h"

namespace loopdet {

/// Conditional click probabilities w(k|n): the chance of k clicks given
/// exactly n photons injected, for k = 0..L and n = 0..n_max.
class ResponseMatrix {
 public:
  /// `w` is row-major with L+1 rows (k) and n_max+1 columns (n). Entries
  /// must lie within 1e-9 of [0, 1] and every column must sum to one within
  /// 1e-9; entries are clamped to [0, 1] afterwards.
  ResponseMatrix(DetectorParams params, int n_max, std::vector<double> w);

  const DetectorParams &params() const { return params_; }
  int n_max() const { return n_max_; }
  int max_clicks() const { return params_.roundtrips; }
  int rows() const { return params_.roundtrips + 1; }
  int cols() const { return n_max_ + 1; }

  double operator()(int k, int n) const {
    return w_[static_cast<std::size_t>(k) * static_cast<std::size_t>(n_max_ + 1) +
              static_cast<std::size_t>(n)];
  }
  std::vector<double> column(int n) const;
  std::span<const double> data() const { return w_; }

 private:
  DetectorParams params_;
  int n_max_;
  std::vector<double> w_;
};

/// 1 - (1 - p_d) exp(-eta t_c t_r^(i-1) I) for roundtrip i in 1..L.
double click_probability(const DetectorParams &params, int i, double intensity);

/// Probability generating function of the click count for coherent input.
double generating_function(const DetectorParams &params, double intensity, double z);

/// Exact click distribution for coherent input of the given mean photon number.
CountDistribution count_distribution_coherent(const DetectorParams &params, double intensity);

struct MixtureComponent {
  double weight = 0.0;
  double intensity = 0.0;
};

/// Click distribution of a discrete mixture of coherent intensities.
CountDistribution count_distribution_mixture(const DetectorParams &params,
                                             std::span<const MixtureComponent> mixture);

/// eta t_c / (1 - t_r).
double effective_efficiency(const DetectorParams &params);

struct PoissonApproximation {
  double mean;
  CountDistribution distribution;
  /// Poisson mass above k = L dropped before renormalizing.
  double truncated_mass;
};

/// Poisson limit of weak coupling and many roundtrips.
PoissonApproximation poisson_approximation(const DetectorParams &params, double intensity);

/// Builds w(k|n) by expanding e^I times the coherent generating function as a
/// double series in z and I: w(k|n) = n! [z^k I^n].
ResponseMatrix response_matrix(const DetectorParams &params, int n_max);

/// Builds w(k|n) by enumerating the fate of every photon. Cost grows as
/// (L+1)^n_max; meant as a cross-check for small L and n_max.
ResponseMatrix response_matrix_bruteforce(const DetectorParams &params, int n_max);

/// p(k) = sum_n w(k|n) rho(n).
CountDistribution forward_counts(const ResponseMatrix &w, const PhotonNumberDistribution &rho);

}  // namespace loopdet

#endif  // LOOPDET_RESPONSE_H
