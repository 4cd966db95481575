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

#ifndef LOOPDET_DETECTOR_H
#define LOOPDET_DETECTOR_H

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace loopdet {

/// Physical configuration of one loop detector.
///
/// Intensities passed alongside these parameters are measured inside the loop,
/// right after injection; insertion loss of the switch belongs in the
/// intensity, not here.
struct DetectorParams {
  double t_r = 0.0;  ///< power transmission of one roundtrip
  double t_c = 0.0;  ///< fraction extracted to the photodiode per roundtrip
  double eta = 1.0;  ///< photodiode quantum efficiency
  double p_d = 0.0;  ///< dark-count probability per roundtrip window
  int roundtrips = 1;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// Probability that a given photon is extracted and registered during
  /// roundtrip i (1-based): eta * t_c * t_r^(i-1).
  double detection_probability(int i) const;

  /// Stable hexadecimal digest of the parameter values.
  std::string digest() const;

  bool operator==(const DetectorParams &) const = default;
};

/// Probabilities p(k) of k clicks, k = 0..L.
class CountDistribution {
 public:
  /// Accepts entries within 1e-12 of [0, 1] (clamped) whose sum is within
  /// 1e-9 of one.
  explicit CountDistribution(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::size_t size() const { return probs_.size(); }
  int max_clicks() const { return static_cast<int>(probs_.size()) - 1; }
  double mean() const;

 private:
  std::vector<double> probs_;
};

/// Photon-number distribution rho(n), n = 0..n_max.
class PhotonNumberDistribution {
 public:
  /// Entries must lie in [0, 1] and sum to one within 1e-10.
  explicit PhotonNumberDistribution(std::vector<double> rho);

  static PhotonNumberDistribution fock(int n, int n_max);
  /// Poisson(mean) restricted to 0..n_max and renormalized.
  static PhotonNumberDistribution truncated_poisson(double mean, int n_max);

  std::span<const double> probs() const { return rho_; }
  double operator[](std::size_t n) const { return rho_[n]; }
  int n_max() const { return static_cast<int>(rho_.size()) - 1; }

 private:
  std::vector<double> rho_;
};

/// Unnormalized Poisson probabilities e^-mean mean^n / n! for n = 0..n_max.
std::vector<double> poisson_pmf(double mean, int n_max);

/// Probability mass of Poisson(mean) above n_max.
double poisson_tail_mass(double mean, int n_max);

}  // namespace loopdet

#endif  // LOOPDET_DETECTOR_H
