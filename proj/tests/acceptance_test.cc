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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. `acceptance_test <n>` runs criterion n alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "loopdet/io.h"
#include "loopdet/reconstruction.h"
#include "loopdet/response.h"
#include "loopdet/simulator.h"
#include "test_util.h"

using namespace loopdet;
using loopdet::testing::chi_square_gof;
using loopdet::testing::fig2_params;
using loopdet::testing::parameter_grid;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SimulationOptions options(std::uint64_t trials, std::uint64_t seed, unsigned workers = 1) {
  SimulationOptions o;
  o.trials = trials;
  o.seed = seed;
  o.workers = workers;
  return o;
}

// 1. Series-built response matrix equals the photon-fate enumeration.
Verdict oracle_equivalence() {
  const auto start = Clock::now();
  const double dark[] = {0.0, 0.01, 0.1};
  double worst = 0.0;
  int matrices = 0;
  std::size_t points = 0;
  for (int roundtrips = 1; roundtrips <= 4; ++roundtrips) {
    const auto grid = parameter_grid(dark, roundtrips);
    points = grid.size();
    for (const auto &p : grid) {
      for (int n_max = 0; n_max <= 4; ++n_max) {
        const auto series = response_matrix(p, n_max);
        const auto brute = response_matrix_bruteforce(p, n_max);
        ++matrices;
        for (int k = 0; k < series.rows(); ++k) {
          for (int n = 0; n < series.cols(); ++n) worst = std::max(worst, std::abs(series(k, n) - brute(k, n)));
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 10.0 && points >= 27,
          fmt::format("{} matrices over {} parameter points per L, max |diff| = {:.3g} (tol 1e-10), {:.2f} s (limit 10 s)",
                      matrices, points, worst, elapsed)};
}

// 2. Coherent and single-photon panels reconstructed within 3 standard errors.
Verdict fig2_reproduction() {
  const auto start = Clock::now();
  constexpr double kRoundoffFloor = 1e-12;
  const auto p = fig2_params(50);
  const int n_max = 5;
  const auto w = response_matrix(p, n_max);
  const auto coherent = reconstruct_svd(w, simulate_coherent(p, 1.0, options(100000, 0)));
  const auto fock = reconstruct_svd(w, simulate_fock(p, 1, options(100000, 0)));
  const auto poisson = poisson_pmf(1.0, n_max);

  bool ok = true;
  double worst_z_coherent = 0.0, worst_z_fock = 0.0;
  auto check = [&](const ReconstructionResult &r, const std::vector<double> &exact, double &worst_z) {
    for (int n = 0; n <= n_max; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double diff = std::abs(r.rho_hat[i] - exact[i]);
      const double bound = 3.0 * r.std_errors[i] + kRoundoffFloor;
      ok = ok && diff <= bound;
      worst_z = std::max(worst_z, diff / bound);
    }
  };
  check(coherent, poisson, worst_z_coherent);
  std::vector<double> single(n_max + 1, 0.0);
  single[1] = 1.0;
  check(fock, single, worst_z_fock);
  const double elapsed = seconds_since(start);
  return {ok && elapsed < 60.0,
          fmt::format("seed 0, N=1e5, L=50, n_max={}: max |diff|/(3 se + 1e-12): coherent {:.3f}, Fock {:.3f} "
                      "(limit 1), rho_hat(1) Fock = {:.5f} +/- {:.5f}, {:.2f} s (limit 60 s)",
                      n_max, worst_z_coherent, worst_z_fock, fock.rho_hat[1], fock.std_errors[1], elapsed)};
}

// 3. Effective efficiency and the closed-form mean count.
Verdict effective_efficiency_and_mean() {
  const auto p = fig2_params(50);
  const double eff = effective_efficiency(p);
  const double eff_err = std::abs(eff - 4.0 / 7.0);
  const double closed_form = p.eta * p.t_c * 1.0 * (1.0 - std::pow(p.t_r, 50)) / (1.0 - p.t_r);
  const double mean = count_distribution_coherent(p, 1.0).mean();
  const double mean_err = std::abs(mean - closed_form);
  // Supporting identities that do hold: the mean click count is the sum of
  // per-roundtrip click probabilities, and the closed form is the mean click
  // count of a single photon, w(1|1).
  double click_sum = 0.0;
  for (int i = 1; i <= 50; ++i) click_sum += click_probability(p, i, 1.0);
  const double single_photon_mean = forward_counts(response_matrix(p, 1), PhotonNumberDistribution::fock(1, 1)).mean();
  return {eff_err <= 1e-12 && mean_err <= 1e-12,
          fmt::format("eta_eff = {:.17g} (|diff from 4/7| = {:.2g}, tol 1e-12); coherent mean clicks = {:.12f} vs "
                      "eta t_c I (1-t_r^L)/(1-t_r) = {:.12f}, |diff| = {:.4g} (tol 1e-12); "
                      "sum_i click_probability = {:.12f}; single-photon mean clicks = {:.12f}",
                      eff, eff_err, mean, closed_form, mean_err, click_sum, single_photon_mean)};
}

// 4. Poisson limit in the weak-coupling, many-roundtrip regime.
Verdict poisson_limit() {
  DetectorParams p{0.98, 0.01, 0.8, 1e-6, 2000};
  const auto exact = count_distribution_coherent(p, 0.1);
  const auto approx = poisson_approximation(p, 0.1);
  double tv = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) tv += std::abs(exact[k] - approx.distribution[k]);
  tv *= 0.5;
  return {tv <= 1e-3, fmt::format("total variation distance = {:.3g} (limit 1e-3), lambda = {:.6f}", tv, approx.mean)};
}

// 5. Every distribution and response column sums to one.
Verdict normalization() {
  const double dark[] = {0.0, 0.01, 0.1};
  double worst_column = 0.0, worst_dist = 0.0;
  std::size_t columns = 0, dists = 0;
  auto track = [&](std::span<const double> probs) {
    double s = 0.0;
    for (double v : probs) s += v;
    worst_dist = std::max(worst_dist, std::abs(s - 1.0));
    ++dists;
  };
  for (int roundtrips : {1, 2, 5, 10, 25, 50}) {
    for (const auto &p : parameter_grid(dark, roundtrips)) {
      const auto w = response_matrix(p, 15);
      for (int n = 0; n <= 15; ++n) {
        double s = 0.0;
        for (int k = 0; k < w.rows(); ++k) s += w(k, n);
        worst_column = std::max(worst_column, std::abs(s - 1.0));
        ++columns;
      }
      for (double intensity : {0.0, 0.5, 1.0, 3.0, 10.0}) {
        track(count_distribution_coherent(p, intensity).probs());
        track(poisson_approximation(p, intensity).distribution.probs());
        track(forward_counts(w, PhotonNumberDistribution::truncated_poisson(intensity, 15)).probs());
      }
      for (int n : {0, 1, 7, 15}) track(forward_counts(w, PhotonNumberDistribution::fock(n, 15)).probs());
      const MixtureComponent mix[] = {{0.3, 0.2}, {0.7, 2.5}};
      track(count_distribution_mixture(p, mix).probs());
    }
  }
  return {worst_column <= 1e-9 && worst_dist <= 1e-9,
          fmt::format("{} response columns, max |sum-1| = {:.3g}; {} count distributions, max |sum-1| = {:.3g} (tol 1e-9)",
                      columns, worst_column, dists, worst_dist)};
}

// 6. Chi-square fit of simulated histograms against the forward model.
Verdict simulator_fidelity() {
  const auto p = fig2_params(50);
  const auto w = response_matrix(p, 30);
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 600;
  for (double intensity : {0.5, 1.0, 3.0}) {
    const auto h = simulate_coherent(p, intensity, options(100000, ++seed));
    const auto expected = forward_counts(w, PhotonNumberDistribution::truncated_poisson(intensity, 30));
    const auto r = chi_square_gof(h.tallies, expected.probs(), h.trials);
    ok = ok && r.p_value > 1e-3;
    detail += fmt::format("coherent I={}: p={:.3f} (dof {}); ", intensity, r.p_value, r.dof);
  }
  for (int n : {1, 2}) {
    const auto h = simulate_fock(p, n, options(100000, ++seed));
    const auto expected = forward_counts(w, PhotonNumberDistribution::fock(n, 30));
    const auto r = chi_square_gof(h.tallies, expected.probs(), h.trials);
    ok = ok && r.p_value > 1e-3;
    detail += fmt::format("Fock n={}: p={:.3f} (dof {}); ", n, r.p_value, r.dof);
  }
  detail += "significance 1e-3";
  return {ok, detail};
}

// 7. Exact probabilities invert back to the input distribution.
Verdict noiseless_inversion() {
  const auto w = response_matrix(fig2_params(50), 5);
  std::mt19937_64 rng(7);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rho(6);
    double total = 0.0;
    for (double &r : rho) total += (r = gamma(rng));
    for (double &r : rho) r /= total;
    const PhotonNumberDistribution dist(rho);
    const auto r = reconstruct_svd(w, forward_counts(w, dist).probs(), std::nullopt);
    for (std::size_t n = 0; n < rho.size(); ++n) worst = std::max(worst, std::abs(r.rho_hat[n] - rho[n]));
  }
  return {worst <= 1e-6, fmt::format("20 random distributions, n_max=5: max |error| = {:.3g} (tol 1e-6)", worst)};
}

// 8. Singularity test separates a dead coupler from the working detector.
Verdict degeneracy_detection() {
  DetectorParams dead = fig2_params(50);
  dead.t_c = 0.0;
  const auto dead_report = condition_diagnostics(response_matrix(dead, 5));
  const auto live_report = condition_diagnostics(response_matrix(fig2_params(50), 5));
  return {!dead_report.invertible && live_report.invertible,
          fmt::format("t_c=0: rank {} of 6, invertible={}; t_c=0.2: rank {} of 6, condition {:.4g}, invertible={}",
                      dead_report.numerical_rank, dead_report.invertible, live_report.numerical_rank,
                      live_report.condition_number, live_report.invertible)};
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string &args) {
  const std::string cmd = std::string("\"") + LOOPDET_CLI_PATH + "\" " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

// 9. Same seed, same bytes; worker count never changes histograms.
Verdict reproducibility() {
  const auto root = std::filesystem::temp_directory_path() / "loopdet_acceptance_reproducibility";
  std::filesystem::remove_all(root);
  const auto a = root / "a", b = root / "b", c = root / "c";
  if (run_tool("fig2 --seed 5 --out-dir \"" + a.string() + "\"") != 0 ||
      run_tool("fig2 --seed 5 --out-dir \"" + b.string() + "\"") != 0 ||
      run_tool("fig2 --seed 5 --workers 4 --out-dir \"" + c.string() + "\"") != 0) {
    return {false, "fig2 command failed"};
  }
  int files = 0;
  bool identical = true;
  for (const auto &entry : std::filesystem::directory_iterator(a)) {
    const auto name = entry.path().filename();
    identical = identical && slurp(a / name) == slurp(b / name);
    ++files;
  }
  bool workers_identical = true;
  for (const char *name : {"fig2_coherent_histogram.csv", "fig2_fock_histogram.csv"}) {
    workers_identical = workers_identical && !slurp(a / name).empty() && slurp(a / name) == slurp(c / name);
  }
  // Library level, more worker counts and samplers.
  const auto p = fig2_params(50);
  const auto rho = PhotonNumberDistribution::truncated_poisson(1.0, 20);
  for (unsigned workers : {2u, 3u, 7u}) {
    workers_identical = workers_identical &&
                        simulate_coherent(p, 1.0, options(100000, 5, 1)).tallies ==
                            simulate_coherent(p, 1.0, options(100000, 5, workers)).tallies &&
                        simulate_fock(p, 1, options(100000, 5, 1)).tallies ==
                            simulate_fock(p, 1, options(100000, 5, workers)).tallies &&
                        simulate_distribution(p, rho, options(100000, 5, 1)).tallies ==
                            simulate_distribution(p, rho, options(100000, 5, workers)).tallies;
  }
  return {identical && workers_identical && files == 5,
          fmt::format("{} fig2 output files byte-identical across runs: {}; histograms identical for workers 1/2/3/4/7: {}",
                      files, identical, workers_identical)};
}

struct Criterion {
  int id;
  const char *name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char **argv) {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "Fig. 2 reproduction", fig2_reproduction},
      {3, "effective efficiency and mean count", effective_efficiency_and_mean},
      {4, "Poisson limit", poisson_limit},
      {5, "normalization suite", normalization},
      {6, "simulator fidelity", simulator_fidelity},
      {7, "noiseless inversion", noiseless_inversion},
      {8, "degeneracy detection", degeneracy_detection},
      {9, "reproducibility", reproducibility},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  int ran = 0;
  for (const auto &c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Verdict v{false, ""};
    try {
      v = c.run();
    } catch (const std::exception &e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d. %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    if (!v.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion numbered %s\n", argv[1]);
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
