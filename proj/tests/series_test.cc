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
#include <random>
#include <stdexcept>

#include "gtest/gtest.h"

using namespace loopdet;

namespace {

BivariateSeries random_series(std::mt19937_64 &rng, int k_max, int n_max) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  BivariateSeries s(k_max, n_max);
  for (int k = 0; k <= k_max; ++k) {
    for (int n = 0; n <= n_max; ++n) s(k, n) = dist(rng) / ((k + 1) * (n + 1));
  }
  return s;
}

double max_abs_diff(const BivariateSeries &a, const BivariateSeries &b) {
  double d = 0.0;
  for (int k = 0; k <= a.k_max(); ++k) {
    for (int n = 0; n <= a.n_max(); ++n) d = std::max(d, std::abs(a(k, n) - b(k, n)));
  }
  return d;
}

}  // namespace

TEST(Series, constant) {
  const auto one = series_constant(1.0, 2, 2);
  for (int k = 0; k <= 2; ++k) {
    for (int n = 0; n <= 2; ++n) ASSERT_EQ(one.coefficient(k, n), (k == 0 && n == 0) ? 1.0 : 0.0);
  }
  const auto zero = series_constant(0.0, 1, 1);
  for (int k = 0; k <= 1; ++k) {
    for (int n = 0; n <= 1; ++n) ASSERT_EQ(zero.coefficient(k, n), 0.0);
  }
  const auto scalar = series_constant(0.5, 0, 0);
  ASSERT_EQ(scalar.k_max(), 0);
  ASSERT_EQ(scalar.n_max(), 0);
  ASSERT_EQ(scalar.coefficient(0, 0), 0.5);
}

TEST(Series, bounds_errors) {
  ASSERT_THROW(series_constant(1.0, -1, 2), std::invalid_argument);
  ASSERT_THROW(series_constant(1.0, 2, -1), std::invalid_argument);
  ASSERT_THROW(series_constant(NAN, 2, 2), std::invalid_argument);
  const auto s = series_constant(1.0, 2, 3);
  ASSERT_THROW(series_coefficient(s, 3, 0), std::invalid_argument);
  ASSERT_THROW(series_coefficient(s, 0, 4), std::invalid_argument);
  ASSERT_THROW(series_coefficient(s, -1, 0), std::invalid_argument);
  ASSERT_THROW(series_mul(series_constant(1.0, 2, 3), series_constant(1.0, 3, 2)),
               std::invalid_argument);
}

TEST(Series, mul_identity_and_truncation) {
  std::mt19937_64 rng(7);
  const auto b = random_series(rng, 3, 4);
  ASSERT_EQ(max_abs_diff(series_mul(series_constant(1.0, 3, 4), b), b), 0.0);

  BivariateSeries z(1, 0);
  z(1, 0) = 1.0;
  const auto z2 = series_mul(z, z);
  ASSERT_EQ(z2.coefficient(0, 0), 0.0);
  ASSERT_EQ(z2.coefficient(1, 0), 0.0);

  BivariateSeries one_plus_i(0, 2);
  one_plus_i(0, 0) = 1.0;
  one_plus_i(0, 1) = 1.0;
  const auto sq = series_mul(one_plus_i, one_plus_i);
  ASSERT_EQ(sq.coefficient(0, 0), 1.0);
  ASSERT_EQ(sq.coefficient(0, 1), 2.0);
  ASSERT_EQ(sq.coefficient(0, 2), 1.0);
}

TEST(Series, exp_intensity) {
  const auto unit = exp_intensity_series(0.0, 2, 5);
  ASSERT_EQ(max_abs_diff(unit, series_constant(1.0, 2, 5)), 0.0);

  const auto e = exp_intensity_series(1.0, 1, 3);
  ASSERT_DOUBLE_EQ(e.coefficient(0, 0), 1.0);
  ASSERT_DOUBLE_EQ(e.coefficient(0, 1), 1.0);
  ASSERT_DOUBLE_EQ(e.coefficient(0, 2), 0.5);
  ASSERT_DOUBLE_EQ(e.coefficient(0, 3), 1.0 / 6.0);
  for (int n = 0; n <= 3; ++n) ASSERT_EQ(e.coefficient(1, n), 0.0);
  ASSERT_EQ(series_coefficient(e, 0, 2), 0.5);

  ASSERT_DOUBLE_EQ(exp_intensity_series(-0.16, 0, 4).coefficient(0, 1), -0.16);
}

// Cells of e^I (z + (1-z) 0.9 e^{-0.16 I}) (z + (1-z) 0.9 e^{-0.1152 I}),
// expanded symbolically (tests/oracles/oracle_values.py).
TEST(Series, two_factor_product_matches_symbolic_expansion) {
  const int k_max = 2;
  const int n_max = 4;
  auto factor = [&](double a) {
    auto no_click = exp_intensity_series(-a, k_max, n_max);
    no_click *= 0.9;
    BivariateSeries f(k_max, n_max);
    for (int n = 0; n <= n_max; ++n) {
      f(0, n) = no_click(0, n);
      f(1, n) = (n == 0 ? 1.0 : 0.0) - no_click(0, n);
    }
    return f;
  };
  const auto product = series_mul(series_mul(exp_intensity_series(1.0, k_max, n_max), factor(0.16)),
                                  factor(0.16 * 0.72));
  const double expected[3][5] = {
      {0.81, 0.587088, 0.2127606912, 0.05140298299392, 0.009314220518498304},
      {0.18, 0.378144, 0.2442905856, 0.09000227844096, 0.023024999910653952},
      {0.01, 0.034768, 0.0429487232, 0.025261405231786667, 0.0093274462375144107},
  };
  for (int k = 0; k <= k_max; ++k) {
    for (int n = 0; n <= n_max; ++n) {
      EXPECT_NEAR(product.coefficient(k, n), expected[k][n], 1e-15) << k << "," << n;
    }
  }
}

TEST(Series, mul_commutative_and_associative) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int k_max = static_cast<int>(rng() % 6);
    const int n_max = static_cast<int>(rng() % 9);
    const auto a = random_series(rng, k_max, n_max);
    const auto b = random_series(rng, k_max, n_max);
    const auto c = random_series(rng, k_max, n_max);
    ASSERT_LE(max_abs_diff(series_mul(a, b), series_mul(b, a)), 1e-12);
    ASSERT_LE(max_abs_diff(series_mul(series_mul(a, b), c), series_mul(a, series_mul(b, c))), 1e-12);
  }
}

TEST(Series, exp_inverse_pair_is_unity) {
  for (double a : {-2.0, -1.3, -0.16, 0.0, 0.5, 1.0, 2.0}) {
    const auto prod = series_mul(exp_intensity_series(a, 1, 40), exp_intensity_series(-a, 1, 40));
    ASSERT_LE(max_abs_diff(prod, series_constant(1.0, 1, 40)), 1e-12) << a;
  }
}

TEST(Series, truncation_consistency) {
  std::mt19937_64 rng(3);
  const auto big_a = random_series(rng, 6, 10);
  const auto big_b = random_series(rng, 6, 10);
  auto shrink = [](const BivariateSeries &s, int k_max, int n_max) {
    BivariateSeries out(k_max, n_max);
    for (int k = 0; k <= k_max; ++k) {
      for (int n = 0; n <= n_max; ++n) out(k, n) = s(k, n);
    }
    return out;
  };
  const auto big = series_mul(big_a, big_b);
  const auto small = series_mul(shrink(big_a, 3, 5), shrink(big_b, 3, 5));
  for (int k = 0; k <= 3; ++k) {
    for (int n = 0; n <= 5; ++n) ASSERT_NEAR(small(k, n), big(k, n), 1e-12);
  }
}
