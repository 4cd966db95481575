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

#include "loopdet/response.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "loopdet/series.h"

namespace loopdet {

namespace {

constexpr double kRoundoff = 1e-9;

void check_intensity(double intensity) {
  if (!std::isfinite(intensity) || intensity < 0.0) {
    throw std::invalid_argument(fmt::format("intensity must be nonnegative, got {}", intensity));
  }
}

// Distribution of the number of successes in independent Bernoulli trials,
// folded in one trial at a time.
std::vector<double> bernoulli_convolution(std::span<const double> success) {
  std::vector<double> dist(success.size() + 1, 0.0);
  dist[0] = 1.0;
  std::size_t filled = 0;
  for (double q : success) {
    ++filled;
    for (std::size_t k = filled; k > 0; --k) {
      dist[k] = dist[k] * (1.0 - q) + dist[k - 1] * q;
    }
    dist[0] *= 1.0 - q;
  }
  return dist;
}

}  // namespace

ResponseMatrix::ResponseMatrix(DetectorParams params, int n_max, std::vector<double> w)
    : params_(params), n_max_(n_max), w_(std::move(w)) {
  params_.validate();
  if (n_max_ < 0) {
    throw std::invalid_argument(fmt::format("n_max must be nonnegative, got {}", n_max_));
  }
  if (w_.size() != static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols())) {
    throw std::invalid_argument(fmt::format("response matrix needs {}x{} entries, got {}",
                                            rows(), cols(), w_.size()));
  }
  for (int n = 0; n < cols(); ++n) {
    double sum = 0.0;
    for (int k = 0; k < rows(); ++k) {
      const double v = (*this)(k, n);
      if (!std::isfinite(v) || v < -kRoundoff || v > 1.0 + kRoundoff) {
        throw std::invalid_argument(fmt::format("w({}|{}) = {} outside [0, 1]", k, n, v));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRoundoff) {
      throw std::invalid_argument(fmt::format("column n={} sums to {}, not 1", n, sum));
    }
  }
  for (double &v : w_) v = std::clamp(v, 0.0, 1.0);
}

std::vector<double> ResponseMatrix::column(int n) const {
  if (n < 0 || n > n_max_) {
    throw std::invalid_argument(fmt::format("column {} outside 0..{}", n, n_max_));
  }
  std::vector<double> col(static_cast<std::size_t>(rows()));
  for (int k = 0; k < rows(); ++k) col[static_cast<std::size_t>(k)] = (*this)(k, n);
  return col;
}

double click_probability(const DetectorParams &params, int i, double intensity) {
  params.validate();
  if (i < 1 || i > params.roundtrips) {
    throw std::invalid_argument(
        fmt::format("roundtrip index {} outside 1..{}", i, params.roundtrips));
  }
  check_intensity(intensity);
  // -expm1 keeps precision when the exponent is tiny.
  const double x = params.detection_probability(i) * intensity;
  if (params.p_d == 0.0) return -std::expm1(-x);
  return 1.0 - (1.0 - params.p_d) * std::exp(-x);
}

double generating_function(const DetectorParams &params, double intensity, double z) {
  params.validate();
  check_intensity(intensity);
  if (!std::isfinite(z)) throw std::invalid_argument("z must be finite");
  double product = 1.0;
  for (int i = 1; i <= params.roundtrips; ++i) {
    const double no_click =
        (1.0 - params.p_d) * std::exp(-params.detection_probability(i) * intensity);
    product *= z + (1.0 - z) * no_click;
  }
  return product;
}

CountDistribution count_distribution_coherent(const DetectorParams &params, double intensity) {
  params.validate();
  check_intensity(intensity);
  std::vector<double> clicks(static_cast<std::size_t>(params.roundtrips));
  for (int i = 1; i <= params.roundtrips; ++i) {
    clicks[static_cast<std::size_t>(i - 1)] = click_probability(params, i, intensity);
  }
  return CountDistribution(bernoulli_convolution(clicks));
}

CountDistribution count_distribution_mixture(const DetectorParams &params,
                                             std::span<const MixtureComponent> mixture) {
  params.validate();
  if (mixture.empty()) throw std::invalid_argument("mixture has no components");
  double total = 0.0;
  for (const auto &c : mixture) {
    if (!std::isfinite(c.weight) || c.weight < 0.0) {
      throw std::invalid_argument(fmt::format("mixture weight {} is negative", c.weight));
    }
    check_intensity(c.intensity);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::invalid_argument(fmt::format("mixture weights sum to {}, not 1", total));
  }
  std::vector<double> probs(static_cast<std::size_t>(params.roundtrips + 1), 0.0);
  for (const auto &c : mixture) {
    const CountDistribution part = count_distribution_coherent(params, c.intensity);
    for (std::size_t k = 0; k < probs.size(); ++k) probs[k] += c.weight * part[k];
  }
  return CountDistribution(std::move(probs));
}

double effective_efficiency(const DetectorParams &params) {
  params.validate();
  if (params.t_r >= 1.0) {
    throw std::invalid_argument("effective efficiency needs t_r < 1");
  }
  return params.eta * params.t_c / (1.0 - params.t_r);
}

PoissonApproximation poisson_approximation(const DetectorParams &params, double intensity) {
  check_intensity(intensity);
  const double mean = effective_efficiency(params) * intensity +
                      static_cast<double>(params.roundtrips) * params.p_d;
  std::vector<double> probs = poisson_pmf(mean, params.roundtrips);
  const double tail = poisson_tail_mass(mean, params.roundtrips);
  double kept = 0.0;
  for (double p : probs) kept += p;
  for (double &p : probs) p /= kept;
  return {mean, CountDistribution(std::move(probs)), tail};
}

ResponseMatrix response_matrix(const DetectorParams &params, int n_max) {
  params.validate();
  if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
  const int k_max = params.roundtrips;

  BivariateSeries acc = exp_intensity_series(1.0, k_max, n_max);
  for (int i = 1; i <= params.roundtrips; ++i) {
    // z + (1 - z) e_i  =  e_i + z (1 - e_i),  e_i = (1 - p_d) exp(-a_i I)
    BivariateSeries no_click = exp_intensity_series(-params.detection_probability(i), k_max, n_max);
    no_click *= 1.0 - params.p_d;
    BivariateSeries factor(k_max, n_max);
    for (int n = 0; n <= n_max; ++n) {
      factor(0, n) = no_click(0, n);
      if (k_max >= 1) factor(1, n) = (n == 0 ? 1.0 : 0.0) - no_click(0, n);
    }
    acc = series_mul(acc, factor);
  }

  std::vector<double> w(static_cast<std::size_t>(k_max + 1) * static_cast<std::size_t>(n_max + 1));
  double factorial = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) factorial *= n;
    for (int k = 0; k <= k_max; ++k) {
      w[static_cast<std::size_t>(k) * static_cast<std::size_t>(n_max + 1) +
        static_cast<std::size_t>(n)] = factorial * series_coefficient(acc, k, n);
    }
  }
  return ResponseMatrix(params, n_max, std::move(w));
}

ResponseMatrix response_matrix_bruteforce(const DetectorParams &params, int n_max) {
  params.validate();
  if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
  const int windows = params.roundtrips;

  // Fate f in 1..L: registered in roundtrip f. Fate 0: never registered.
  std::vector<double> fate(static_cast<std::size_t>(windows + 1));
  double registered = 0.0;
  for (int i = 1; i <= windows; ++i) {
    fate[static_cast<std::size_t>(i)] = params.detection_probability(i);
    registered += fate[static_cast<std::size_t>(i)];
  }
  fate[0] = 1.0 - registered;

  std::vector<double> w(static_cast<std::size_t>(windows + 1) * static_cast<std::size_t>(n_max + 1),
                        0.0);
  std::vector<int> assignment;
  std::vector<char> lit(static_cast<std::size_t>(windows + 1));
  for (int n = 0; n <= n_max; ++n) {
    assignment.assign(static_cast<std::size_t>(n), 0);
    while (true) {
      double prob = 1.0;
      std::fill(lit.begin(), lit.end(), 0);
      for (int f : assignment) {
        prob *= fate[static_cast<std::size_t>(f)];
        lit[static_cast<std::size_t>(f)] = 1;
      }
      int photon_clicks = 0;
      for (int i = 1; i <= windows; ++i) photon_clicks += lit[static_cast<std::size_t>(i)];

      // Each remaining window fires on a dark count independently.
      std::vector<double> dark(static_cast<std::size_t>(windows - photon_clicks + 1), 0.0);
      dark[0] = 1.0;
      for (int j = 0; j < windows - photon_clicks; ++j) {
        for (int d = j + 1; d > 0; --d) {
          dark[static_cast<std::size_t>(d)] =
              dark[static_cast<std::size_t>(d)] * (1.0 - params.p_d) +
              dark[static_cast<std::size_t>(d - 1)] * params.p_d;
        }
        dark[0] *= 1.0 - params.p_d;
      }
      for (std::size_t d = 0; d < dark.size(); ++d) {
        const std::size_t k = static_cast<std::size_t>(photon_clicks) + d;
        w[k * static_cast<std::size_t>(n_max + 1) + static_cast<std::size_t>(n)] += prob * dark[d];
      }

      // Odometer over (L+1)^n assignments.
      int pos = 0;
      while (pos < n && assignment[static_cast<std::size_t>(pos)] == windows) {
        assignment[static_cast<std::size_t>(pos)] = 0;
        ++pos;
      }
      if (pos == n) break;
      ++assignment[static_cast<std::size_t>(pos)];
    }
  }
  return ResponseMatrix(params, n_max, std::move(w));
}

CountDistribution forward_counts(const ResponseMatrix &w, const PhotonNumberDistribution &rho) {
  if (rho.n_max() > w.n_max()) {
    throw std::invalid_argument(fmt::format(
        "distribution truncation {} exceeds response matrix truncation {}", rho.n_max(),
        w.n_max()));
  }
  std::vector<double> probs(static_cast<std::size_t>(w.rows()), 0.0);
  for (int k = 0; k < w.rows(); ++k) {
    double sum = 0.0;
    for (int n = 0; n <= rho.n_max(); ++n) sum += w(k, n) * rho[static_cast<std::size_t>(n)];
    probs[static_cast<std::size_t>(k)] = sum;
  }
  return CountDistribution(std::move(probs));
}

}  // namespace loopdet
