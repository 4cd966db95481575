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

#ifndef LOOPDET_SIMULATOR_H
#define LOOPDET_SIMULATOR_H

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loopdet/detector.h"
#include "loopdet/response.h"

namespace loopdet {

/// Tallies of k-click outcomes over repeated trials.
struct CountHistogram {
  std::vector<std::uint64_t> tallies;  ///< index k = 0..L
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string params_digest;

  /// Throws std::invalid_argument unless the tallies sum to `trials`.
  void validate() const;
  int max_clicks() const { return static_cast<int>(tallies.size()) - 1; }
  /// Relative frequencies tallies / trials.
  std::vector<double> frequencies() const;
  double mean() const;
};

/// Counter-based random stream: the state is a pure function of (seed, trial),
/// so trial i draws the same numbers no matter which worker runs it.
class TrialStream {
 public:
  TrialStream(std::uint64_t seed, std::uint64_t trial);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

struct SimulationOptions {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  /// Threads used; the histogram does not depend on this.
  unsigned workers = 1;
};

/// Exactly n photons injected per trial; each photon is independently
/// registered in one roundtrip or never, and every window may also fire on a
/// dark count.
CountHistogram simulate_fock(const DetectorParams &params, int photons,
                             const SimulationOptions &options);

/// Coherent input: independent Bernoulli clicks per roundtrip.
CountHistogram simulate_coherent(const DetectorParams &params, double intensity,
                                 const SimulationOptions &options);

/// Photon number drawn from rho each trial, then the Fock trial path.
CountHistogram simulate_distribution(const DetectorParams &params,
                                     const PhotonNumberDistribution &rho,
                                     const SimulationOptions &options);

/// Discrete mixture of coherent intensities: one component drawn per trial by
/// weight, then the coherent trial path.
CountHistogram simulate_mixture(const DetectorParams &params,
                                std::span<const MixtureComponent> mixture,
                                const SimulationOptions &options);

}  // namespace loopdet

#endif  // LOOPDET_SIMULATOR_H
