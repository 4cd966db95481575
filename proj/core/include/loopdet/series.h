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

#ifndef LOOPDET_SERIES_H
#define LOOPDET_SERIES_H

#include <cstddef>
#include <vector>

namespace loopdet {

/// Dense bivariate power series in the count variable z and the intensity I,
/// truncated at z^k_max and I^n_max. Coefficient c[k][n] multiplies z^k I^n.
///
/// Every arithmetic operation truncates its result back to the operand bounds;
/// degrees never grow implicitly.
class BivariateSeries {
 public:
  BivariateSeries(int k_max, int n_max);

  static BivariateSeries constant(double value, int k_max, int n_max);

  int k_max() const { return k_max_; }
  int n_max() const { return n_max_; }

  /// Bounds-checked coefficient read.
  double coefficient(int k, int n) const;

  // Unchecked access for hot loops.
  double operator()(int k, int n) const { return coeffs_[index(k, n)]; }
  double &operator()(int k, int n) { return coeffs_[index(k, n)]; }

  bool same_shape(const BivariateSeries &other) const {
    return k_max_ == other.k_max_ && n_max_ == other.n_max_;
  }

  /// True if every coefficient with z-degree k is zero.
  bool row_is_zero(int k) const;

  BivariateSeries &operator*=(double factor);

 private:
  std::size_t index(int k, int n) const {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(n_max_ + 1) +
           static_cast<std::size_t>(n);
  }

  int k_max_;
  int n_max_;
  std::vector<double> coeffs_;
};

/// Constant series with c[0][0] = value.
BivariateSeries series_constant(double value, int k_max, int n_max);

/// Truncated Cauchy product. Operands must share (k_max, n_max).
BivariateSeries series_mul(const BivariateSeries &a, const BivariateSeries &b);

/// exp(a*I) expanded in I: c[0][n] = a^n / n!.
BivariateSeries exp_intensity_series(double a, int k_max, int n_max);

double series_coefficient(const BivariateSeries &s, int k, int n);

}  // namespace loopdet

#endif  // LOOPDET_SERIES_H
