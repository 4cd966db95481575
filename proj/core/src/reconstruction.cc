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

#include "loopdet/reconstruction.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace loopdet {

namespace {

Eigen::MatrixXd to_eigen(const ResponseMatrix &w) {
  Eigen::MatrixXd m(w.rows(), w.cols());
  for (int k = 0; k < w.rows(); ++k) {
    for (int n = 0; n < w.cols(); ++n) m(k, n) = w(k, n);
  }
  return m;
}

void check_threshold(double sv_threshold) {
  if (!(sv_threshold > 0.0 && sv_threshold < 1.0)) {
    throw std::invalid_argument(
        fmt::format("sv_threshold must lie in (0, 1), got {}", sv_threshold));
  }
}

int retained_count(const Eigen::VectorXd &sigma, double sv_threshold) {
  if (sigma.size() == 0) return 0;
  const double cutoff = sv_threshold * sigma(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) ++rank;
  }
  return rank;
}

Eigen::MatrixXd multinomial_covariance(std::span<const double> p, std::uint64_t trials) {
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
  Eigen::MatrixXd cov = -pv * pv.transpose();
  cov.diagonal() += pv;
  return cov / static_cast<double>(trials);
}

}  // namespace

std::vector<double> ReconstructionResult::clipped() const {
  std::vector<double> out(rho_hat.size());
  double total = 0.0;
  for (std::size_t n = 0; n < rho_hat.size(); ++n) {
    out[n] = std::max(rho_hat[n], 0.0);
    total += out[n];
  }
  if (total > 0.0) {
    for (double &v : out) v /= total;
  }
  return out;
}

Eigen::MatrixXd pseudo_inverse(const ResponseMatrix &w, double sv_threshold) {
  check_threshold(sv_threshold);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(w),
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd &sigma = svd.singularValues();
  const int rank = retained_count(sigma, sv_threshold);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  for (int i = 0; i < rank; ++i) inv(i) = 1.0 / sigma(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::vector<double> estimate_errors(const Eigen::MatrixXd &w_pinv,
                                    std::span<const double> frequencies, std::uint64_t trials) {
  if (trials < 2) throw std::invalid_argument("error estimate needs at least 2 trials");
  if (static_cast<Eigen::Index>(frequencies.size()) != w_pinv.cols()) {
    throw std::invalid_argument("frequency vector does not match the pseudo-inverse");
  }
  const Eigen::MatrixXd cov =
      w_pinv * multinomial_covariance(frequencies, trials) * w_pinv.transpose();
  std::vector<double> errors(static_cast<std::size_t>(cov.rows()));
  for (Eigen::Index n = 0; n < cov.rows(); ++n) {
    errors[static_cast<std::size_t>(n)] = std::sqrt(std::max(cov(n, n), 0.0));
  }
  return errors;
}

ReconstructionResult reconstruct_svd(const ResponseMatrix &w, const CountHistogram &hist,
                                     double sv_threshold) {
  hist.validate();
  if (hist.max_clicks() != w.max_clicks()) {
    throw std::invalid_argument(fmt::format(
        "histogram covers k = 0..{} but the response matrix covers k = 0..{}",
        hist.max_clicks(), w.max_clicks()));
  }
  const std::vector<double> freq = hist.frequencies();
  return reconstruct_svd(w, freq, hist.trials, sv_threshold);
}

ReconstructionResult reconstruct_svd(const ResponseMatrix &w, std::span<const double> probs,
                                     std::optional<std::uint64_t> trials, double sv_threshold) {
  check_threshold(sv_threshold);
  if (static_cast<int>(probs.size()) != w.rows()) {
    throw std::invalid_argument(fmt::format("{} click probabilities given, response matrix has {} rows",
                                            probs.size(), w.rows()));
  }
  const Eigen::MatrixXd pinv = pseudo_inverse(w, sv_threshold);
  const Eigen::Map<const Eigen::VectorXd> p(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const Eigen::VectorXd rho = pinv * p;
  const Eigen::VectorXd residual = to_eigen(w) * rho - p;

  ReconstructionResult result;
  result.rho_hat.assign(rho.data(), rho.data() + rho.size());
  result.n_max = w.n_max();
  result.sv_threshold = sv_threshold;
  result.residual_norm = residual.norm();
  result.trials = trials;
  const ConditioningReport report = condition_diagnostics(w, sv_threshold);
  result.numerical_rank = report.numerical_rank;
  result.rank_deficient = !report.invertible;
  if (trials) {
    result.std_errors = estimate_errors(pinv, probs, *trials);
    const Eigen::VectorXd sum_row = pinv.colwise().sum().transpose();
    const double var = sum_row.dot(multinomial_covariance(probs, *trials) * sum_row);
    result.sum_std_error = std::sqrt(std::max(var, 0.0));
  } else {
    result.std_errors.assign(result.rho_hat.size(), 0.0);
  }
  return result;
}

ConditioningReport condition_diagnostics(const ResponseMatrix &w, double sv_threshold) {
  check_threshold(sv_threshold);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(w));
  const Eigen::VectorXd &sigma = svd.singularValues();
  ConditioningReport report;
  report.sv_threshold = sv_threshold;
  report.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
  report.numerical_rank = retained_count(sigma, sv_threshold);
  report.condition_number = report.numerical_rank > 0
                                ? sigma(0) / sigma(report.numerical_rank - 1)
                                : std::numeric_limits<double>::infinity();
  report.invertible = report.numerical_rank == w.cols();
  return report;
}

}  // namespace loopdet
