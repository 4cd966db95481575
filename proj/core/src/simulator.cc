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

#include "loopdet/simulator.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "loopdet/response.h"

namespace loopdet {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_options(const SimulationOptions &options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
}

// Runs trial(stream, tallies) for every trial index, splitting the index range
// into contiguous chunks across workers. Tallies are merged by addition.
CountHistogram run_trials(const DetectorParams &params, const SimulationOptions &options,
                          const std::function<int(TrialStream &)> &trial) {
  check_options(options);
  const std::size_t bins = static_cast<std::size_t>(params.roundtrips + 1);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(options.workers, 1, options.trials));
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(bins, 0));

  auto work = [&](unsigned w) {
    const std::uint64_t begin = options.trials * w / workers;
    const std::uint64_t end = options.trials * (w + 1) / workers;
    auto &tallies = partial[w];
    for (std::uint64_t t = begin; t < end; ++t) {
      TrialStream stream(options.seed, t);
      ++tallies[static_cast<std::size_t>(trial(stream))];
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }

  CountHistogram hist;
  hist.tallies.assign(bins, 0);
  for (const auto &part : partial) {
    for (std::size_t k = 0; k < bins; ++k) hist.tallies[k] += part[k];
  }
  hist.trials = options.trials;
  hist.seed = options.seed;
  hist.params_digest = params.digest();
  return hist;
}

// Cumulative registration probabilities over roundtrips 1..L; a draw above the
// last entry means the photon is never registered.
std::vector<double> fate_table(const DetectorParams &params) {
  std::vector<double> cumulative(static_cast<std::size_t>(params.roundtrips));
  double sum = 0.0;
  for (int i = 1; i <= params.roundtrips; ++i) {
    sum += params.detection_probability(i);
    cumulative[static_cast<std::size_t>(i - 1)] = sum;
  }
  return cumulative;
}

int fock_trial(const DetectorParams &params, const std::vector<double> &fates, int photons,
               std::vector<char> &lit, TrialStream &stream) {
  std::fill(lit.begin(), lit.end(), 0);
  for (int p = 0; p < photons; ++p) {
    const double u = stream.uniform();
    const auto it = std::upper_bound(fates.begin(), fates.end(), u);
    if (it != fates.end()) lit[static_cast<std::size_t>(it - fates.begin())] = 1;
  }
  int clicks = 0;
  for (char &window : lit) {
    if (!window && params.p_d > 0.0 && stream.uniform() < params.p_d) window = 1;
    clicks += window;
  }
  return clicks;
}

}  // namespace

void CountHistogram::validate() const {
  std::uint64_t sum = 0;
  for (auto t : tallies) sum += t;
  if (tallies.empty() || sum != trials) {
    throw std::invalid_argument(
        fmt::format("histogram tallies sum to {} but trials = {}", sum, trials));
  }
}

std::vector<double> CountHistogram::frequencies() const {
  std::vector<double> f(tallies.size());
  for (std::size_t k = 0; k < tallies.size(); ++k) {
    f[k] = static_cast<double>(tallies[k]) / static_cast<double>(trials);
  }
  return f;
}

double CountHistogram::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < tallies.size(); ++k) {
    m += static_cast<double>(k) * static_cast<double>(tallies[k]);
  }
  return m / static_cast<double>(trials);
}

TrialStream::TrialStream(std::uint64_t seed, std::uint64_t trial)
    : state_(mix64(seed ^ mix64(trial + 0x9e3779b97f4a7c15ULL))) {}

std::uint64_t TrialStream::next_u64() {
  // SplitMix64 step.
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double TrialStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

CountHistogram simulate_fock(const DetectorParams &params, int photons,
                             const SimulationOptions &options) {
  params.validate();
  if (photons < 0) throw std::invalid_argument("photon number must be nonnegative");
  const std::vector<double> fates = fate_table(params);
  return run_trials(params, options, [&](TrialStream &stream) {
    thread_local std::vector<char> lit;
    lit.resize(static_cast<std::size_t>(params.roundtrips));
    return fock_trial(params, fates, photons, lit, stream);
  });
}

CountHistogram simulate_coherent(const DetectorParams &params, double intensity,
                                 const SimulationOptions &options) {
  params.validate();
  if (!std::isfinite(intensity) || intensity < 0.0) {
    throw std::invalid_argument("intensity must be nonnegative");
  }
  std::vector<double> click(static_cast<std::size_t>(params.roundtrips));
  for (int i = 1; i <= params.roundtrips; ++i) {
    click[static_cast<std::size_t>(i - 1)] = click_probability(params, i, intensity);
  }
  return run_trials(params, options, [&](TrialStream &stream) {
    int clicks = 0;
    for (double q : click) clicks += stream.uniform() < q ? 1 : 0;
    return clicks;
  });
}

CountHistogram simulate_distribution(const DetectorParams &params,
                                     const PhotonNumberDistribution &rho,
                                     const SimulationOptions &options) {
  params.validate();
  const std::vector<double> fates = fate_table(params);
  std::vector<double> cumulative(rho.probs().size());
  double sum = 0.0;
  for (std::size_t n = 0; n < cumulative.size(); ++n) {
    sum += rho[n];
    cumulative[n] = sum;
  }
  return run_trials(params, options, [&](TrialStream &stream) {
    thread_local std::vector<char> lit;
    lit.resize(static_cast<std::size_t>(params.roundtrips));
    // Draws at or beyond the rounded total land on the last photon number.
    const double u = stream.uniform() * sum;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const int photons = static_cast<int>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    return fock_trial(params, fates, photons, lit, stream);
  });
}

CountHistogram simulate_mixture(const DetectorParams &params,
                                std::span<const MixtureComponent> mixture,
                                const SimulationOptions &options) {
  // Validates weights and intensities.
  (void)count_distribution_mixture(params, mixture);
  std::vector<double> cumulative(mixture.size());
  std::vector<std::vector<double>> clicks(mixture.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < mixture.size(); ++c) {
    sum += mixture[c].weight;
    cumulative[c] = sum;
    clicks[c].resize(static_cast<std::size_t>(params.roundtrips));
    for (int i = 1; i <= params.roundtrips; ++i) {
      clicks[c][static_cast<std::size_t>(i - 1)] =
          click_probability(params, i, mixture[c].intensity);
    }
  }
  return run_trials(params, options, [&](TrialStream &stream) {
    const double u = stream.uniform() * sum;
    const std::size_t c = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin()),
        cumulative.size() - 1);
    int count = 0;
    for (double q : clicks[c]) count += stream.uniform() < q ? 1 : 0;
    return count;
  });
}

}  // namespace loopdet
