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

#include "loopdet/detector.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace loopdet {

namespace {

void check_fraction(const char *name, double value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw std::invalid_argument(fmt::format("{} must lie in [0, 1], got {}", name, value));
  }
}

}  // namespace

void DetectorParams::validate() const {
  check_fraction("t_r", t_r);
  check_fraction("t_c", t_c);
  check_fraction("eta", eta);
  check_fraction("p_d", p_d);
  if (roundtrips < 1) {
    throw std::invalid_argument(fmt::format("L must be at least 1, got {}", roundtrips));
  }
  // Slack for decimal inputs such as 0.72 + 0.28.
  if (t_r + t_c > 1.0 + 1e-12) {
    throw std::invalid_argument(
        fmt::format("t_c + t_r must not exceed 1 (excess loss is negative), got {} + {}",
                    t_c, t_r));
  }
}

double DetectorParams::detection_probability(int i) const {
  return eta * t_c * std::pow(t_r, i - 1);
}

std::string DetectorParams::digest() const {
  // FNV-1a over the canonical text form.
  const std::string text = fmt::format("t_r={:.17g};t_c={:.17g};eta={:.17g};p_d={:.17g};L={}",
                                       t_r, t_c, eta, p_d, roundtrips);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", hash);
}

CountDistribution::CountDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw std::invalid_argument("count distribution must have at least one entry");
  }
  double sum = 0.0;
  for (double &p : probs_) {
    if (!std::isfinite(p) || p < -1e-12 || p > 1.0 + 1e-12) {
      throw std::invalid_argument(fmt::format("count probability {} outside [0, 1]", p));
    }
    p = std::clamp(p, 0.0, 1.0);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(fmt::format("count probabilities sum to {}, not 1", sum));
  }
}

double CountDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) m += static_cast<double>(k) * probs_[k];
  return m;
}

PhotonNumberDistribution::PhotonNumberDistribution(std::vector<double> rho)
    : rho_(std::move(rho)) {
  if (rho_.empty()) {
    throw std::invalid_argument("photon-number distribution must have at least one entry");
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < rho_.size(); ++n) {
    if (!std::isfinite(rho_[n]) || rho_[n] < 0.0 || rho_[n] > 1.0) {
      throw std::invalid_argument(
          fmt::format("rho({}) = {} outside [0, 1]", n, rho_[n]));
    }
    sum += rho_[n];
  }
  if (std::abs(sum - 1.0) > 1e-10) {
    throw std::invalid_argument(fmt::format("rho sums to {}, not 1", sum));
  }
}

PhotonNumberDistribution PhotonNumberDistribution::fock(int n, int n_max) {
  if (n < 0 || n > n_max) {
    throw std::invalid_argument(fmt::format("Fock state |{}> outside truncation {}", n, n_max));
  }
  std::vector<double> rho(static_cast<std::size_t>(n_max + 1), 0.0);
  rho[static_cast<std::size_t>(n)] = 1.0;
  return PhotonNumberDistribution(std::move(rho));
}

PhotonNumberDistribution PhotonNumberDistribution::truncated_poisson(double mean, int n_max) {
  std::vector<double> rho = poisson_pmf(mean, n_max);
  const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
  for (double &r : rho) r /= total;
  return PhotonNumberDistribution(std::move(rho));
}

std::vector<double> poisson_pmf(double mean, int n_max) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw std::invalid_argument(fmt::format("Poisson mean must be nonnegative, got {}", mean));
  }
  if (n_max < 0) {
    throw std::invalid_argument("n_max must be nonnegative");
  }
  std::vector<double> pmf(static_cast<std::size_t>(n_max + 1));
  double term = std::exp(-mean);
  pmf[0] = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= mean / static_cast<double>(n);
    pmf[static_cast<std::size_t>(n)] = term;
  }
  return pmf;
}

double poisson_tail_mass(double mean, int n_max) {
  // Sum the tail directly; 1 - cdf loses everything below ~1e-16.
  if (!std::isfinite(mean) || mean < 0.0) {
    throw std::invalid_argument(fmt::format("Poisson mean must be nonnegative, got {}", mean));
  }
  if (mean == 0.0) return 0.0;
  double log_term = -mean;
  for (int n = 1; n <= n_max + 1; ++n) log_term += std::log(mean / n);
  double term = std::exp(log_term);
  double tail = 0.0;
  for (int n = n_max + 1; term > 0.0 && (term > tail * 1e-17 || n <= mean); ++n) {
    tail += term;
    term *= mean / static_cast<double>(n + 1);
  }
  return tail;
}

}  // namespace loopdet
