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

#include "loopdet/series.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopdet {

namespace {

void check_bounds(int k_max, int n_max) {
  if (k_max < 0 || n_max < 0) {
    throw std::invalid_argument("series bounds must be nonnegative, got k_max=" +
                                std::to_string(k_max) +
                                " n_max=" + std::to_string(n_max));
  }
}

}  // namespace

BivariateSeries::BivariateSeries(int k_max, int n_max) : k_max_(k_max), n_max_(n_max) {
  check_bounds(k_max, n_max);
  coeffs_.assign(static_cast<std::size_t>(k_max + 1) * static_cast<std::size_t>(n_max + 1),
                 0.0);
}

BivariateSeries BivariateSeries::constant(double value, int k_max, int n_max) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("series constant must be finite");
  }
  BivariateSeries s(k_max, n_max);
  s(0, 0) = value;
  return s;
}

double BivariateSeries::coefficient(int k, int n) const {
  if (k < 0 || k > k_max_ || n < 0 || n > n_max_) {
    throw std::invalid_argument("coefficient index (" + std::to_string(k) + ", " +
                                std::to_string(n) + ") outside series bounds (" +
                                std::to_string(k_max_) + ", " + std::to_string(n_max_) +
                                ")");
  }
  return (*this)(k, n);
}

bool BivariateSeries::row_is_zero(int k) const {
  for (int n = 0; n <= n_max_; ++n) {
    if ((*this)(k, n) != 0.0) return false;
  }
  return true;
}

BivariateSeries &BivariateSeries::operator*=(double factor) {
  for (double &c : coeffs_) c *= factor;
  return *this;
}

BivariateSeries series_constant(double value, int k_max, int n_max) {
  return BivariateSeries::constant(value, k_max, n_max);
}

BivariateSeries series_mul(const BivariateSeries &a, const BivariateSeries &b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("series_mul: operand bounds differ");
  }
  const int k_max = a.k_max();
  const int n_max = a.n_max();
  BivariateSeries out(k_max, n_max);
  std::vector<bool> a_live(k_max + 1), b_live(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    a_live[k] = !a.row_is_zero(k);
    b_live[k] = !b.row_is_zero(k);
  }
  // Zero rows are skipped; the roundtrip factors are degree one in z, so this
  // brings the product down to O(k_max * n_max^2) per factor.
  for (int k = 0; k <= k_max; ++k) {
    for (int n = 0; n <= n_max; ++n) {
      long double acc = 0.0L;
      for (int ka = 0; ka <= k; ++ka) {
        if (!a_live[ka] || !b_live[k - ka]) continue;
        for (int na = 0; na <= n; ++na) {
          acc += static_cast<long double>(a(ka, na)) *
                 static_cast<long double>(b(k - ka, n - na));
        }
      }
      out(k, n) = static_cast<double>(acc);
    }
  }
  return out;
}

BivariateSeries exp_intensity_series(double a, int k_max, int n_max) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("exp_intensity_series: exponent rate must be finite");
  }
  BivariateSeries s(k_max, n_max);
  double term = 1.0;
  s(0, 0) = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= a / static_cast<double>(n);
    s(0, n) = term;
  }
  return s;
}

double series_coefficient(const BivariateSeries &s, int k, int n) {
  return s.coefficient(k, n);
}

}  // namespace loopdet
