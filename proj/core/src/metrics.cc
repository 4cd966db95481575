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

#include "loopdet/metrics.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace loopdet {

namespace {

constexpr double kPlateauTolerance = 1e-12;

std::optional<double> try_confidence(const DetectorParams &params,
                                     const PhotonNumberDistribution &prior, int k) {
  try {
    return confidence(response_matrix(params, prior.n_max()), prior, k);
  } catch (const UndefinedEvent &) {
    return std::nullopt;
  }
}

}  // namespace

double confidence(const ResponseMatrix &w, const PhotonNumberDistribution &prior, int k) {
  if (k < 0 || k > w.max_clicks()) {
    throw std::invalid_argument(fmt::format("click count {} outside 0..{}", k, w.max_clicks()));
  }
  if (k > prior.n_max() || k > w.n_max()) {
    throw std::invalid_argument(fmt::format(
        "confidence of {} clicks needs the {}-photon component, truncation stops at {}", k, k,
        std::min(prior.n_max(), w.n_max())));
  }
  if (prior.n_max() > w.n_max()) {
    throw std::invalid_argument("prior truncation exceeds the response matrix truncation");
  }
  double total = 0.0;
  for (int n = 0; n <= prior.n_max(); ++n) total += w(k, n) * prior[static_cast<std::size_t>(n)];
  if (!(total > 0.0)) {
    throw UndefinedEvent(fmt::format("a {}-click event has zero probability under the prior", k));
  }
  return std::clamp(w(k, k) * prior[static_cast<std::size_t>(k)] / total, 0.0, 1.0);
}

double max_coupling(const LossPolicy &policy) {
  return std::visit(
      [](const auto &p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedExcessLoss>) {
          if (!(p.excess_loss >= 0.0 && p.excess_loss < 1.0)) {
            throw std::invalid_argument(
                fmt::format("excess loss must lie in [0, 1), got {}", p.excess_loss));
          }
          return 1.0 - p.excess_loss;
        } else {
          if (!(p.t_r >= 0.0 && p.t_r < 1.0)) {
            throw std::invalid_argument(fmt::format("fixed t_r must lie in [0, 1), got {}", p.t_r));
          }
          return 1.0 - p.t_r;
        }
      },
      policy);
}

DetectorParams apply_coupling(const DetectorParams &base, const LossPolicy &policy, double t_c) {
  DetectorParams params = base;
  params.t_c = t_c;
  std::visit(
      [&](const auto &p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedExcessLoss>) {
          params.t_r = std::max(0.0, 1.0 - p.excess_loss - t_c);
        } else {
          params.t_r = p.t_r;
        }
      },
      policy);
  params.validate();
  return params;
}

CouplingOptimum optimize_coupling(const DetectorParams &base, const PhotonNumberDistribution &prior,
                                  int k, const LossPolicy &policy, int grid_points) {
  if (grid_points < 1) throw std::invalid_argument("grid needs at least one point");
  const double t_c_max = max_coupling(policy);

  CouplingOptimum out;
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  std::vector<std::optional<double>> values(grid.size());
  for (int j = 0; j < grid_points; ++j) {
    const double t_c = t_c_max * static_cast<double>(j + 1) / static_cast<double>(grid_points);
    grid[static_cast<std::size_t>(j)] = t_c;
    values[static_cast<std::size_t>(j)] = try_confidence(apply_coupling(base, policy, t_c), prior, k);
    if (values[static_cast<std::size_t>(j)]) out.curve.push_back({t_c, *values[static_cast<std::size_t>(j)]});
  }
  if (out.curve.empty()) {
    throw UndefinedEvent(fmt::format("confidence of {} clicks is undefined at every grid point", k));
  }

  // Strict comparison keeps the lowest t_c on ties.
  std::size_t best = grid.size();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (values[j] && (best == grid.size() || *values[j] > *values[best])) best = j;
  }
  int at_max = 0;
  for (const auto &v : values) {
    if (v && *v >= *values[best] - kPlateauTolerance) ++at_max;
  }
  out.t_c = grid[best];
  out.confidence = *values[best];
  out.plateau = at_max > 1;
  if (out.plateau) return out;

  // Golden-section search on the bracket around the best grid point.
  double lo = best == 0 ? 0.0 : grid[best - 1];
  double hi = best + 1 == grid.size() ? t_c_max : grid[best + 1];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  auto eval = [&](double t_c) {
    if (t_c <= 0.0) return -1.0;
    return try_confidence(apply_coupling(base, policy, t_c), prior, k).value_or(-1.0);
  };
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = eval(x1);
  double f2 = eval(x2);
  for (int iter = 0; iter < 80 && hi - lo > 1e-12; ++iter) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = eval(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = eval(x1);
    }
  }
  const double refined_t_c = f1 >= f2 ? x1 : x2;
  const double refined = std::max(f1, f2);
  if (refined > out.confidence) {
    out.t_c = refined_t_c;
    out.confidence = refined;
  }
  return out;
}

}  // namespace loopdet
