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

#ifndef LOOPDET_IO_H
#define LOOPDET_IO_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "loopdet/metrics.h"
#include "loopdet/reconstruction.h"
#include "loopdet/response.h"
#include "loopdet/simulator.h"

namespace loopdet {

/// Configuration problem, tagged with the JSON pointer of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string location, const std::string &message)
      : std::runtime_error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}
  const std::string &location() const { return location_; }

 private:
  std::string location_;
};

struct CoherentInput {
  double intensity = 0.0;
};
struct FockInput {
  int photons = 0;
};
struct DistributionFileInput {
  std::filesystem::path path;
};
struct MixtureFileInput {
  std::filesystem::path path;
};
using InputSpec = std::variant<CoherentInput, FockInput, DistributionFileInput, MixtureFileInput>;

struct CouplingSearch {
  int k = 1;
  /// "fixed_excess_loss" or "fixed_roundtrip".
  std::string policy = "fixed_excess_loss";
  int grid = 200;
};

struct OutputPaths {
  std::optional<std::filesystem::path> histogram;
  std::optional<std::filesystem::path> matrix;
  std::optional<std::filesystem::path> result;
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> directory;
};

struct RunConfig {
  DetectorParams detector;
  std::optional<InputSpec> input;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  int n_max = 5;
  double sv_threshold = kDefaultSvThreshold;
  unsigned workers = 1;
  std::optional<std::filesystem::path> prior;
  std::optional<int> k_max;
  CouplingSearch optimize;
  OutputPaths output;
};

/// Parses a JSON run configuration. Unknown keys, type errors and parameter
/// constraint violations raise ConfigError. Relative file paths resolve
/// against `base_dir` and must exist.
RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir = {});
RunConfig load_config(const std::filesystem::path &path);

/// Loss policy implied by a search spec and the configured detector.
LossPolicy loss_policy(const CouplingSearch &search, const DetectorParams &detector);

/// Text form used for every float in emitted files: 17 significant digits.
std::string format_real(double value);

void write_histogram(std::ostream &out, const CountHistogram &hist, const DetectorParams &params,
                     const std::vector<std::string> &extra_metadata = {});
void write_histogram(const std::filesystem::path &path, const CountHistogram &hist,
                     const DetectorParams &params,
                     const std::vector<std::string> &extra_metadata = {});

struct HistogramFile {
  CountHistogram histogram;
  std::optional<DetectorParams> params;
};
HistogramFile read_histogram(std::istream &in);
HistogramFile read_histogram(const std::filesystem::path &path);

/// Rows k = 0..L, columns n = 0..n_max. The header's corner cell is `k\n`.
void write_matrix(std::ostream &out, const ResponseMatrix &w);
void write_matrix(const std::filesystem::path &path, const ResponseMatrix &w);
std::vector<std::vector<double>> read_matrix(std::istream &in);

/// Two-column `index,probability` files used for exact click probabilities
/// (header `k,probability`) and photon-number distributions (`n,probability`).
void write_probabilities(std::ostream &out, std::string_view index_name,
                         std::span<const double> probs,
                         const std::vector<std::string> &metadata = {});
void write_probabilities(const std::filesystem::path &path, std::string_view index_name,
                         std::span<const double> probs,
                         const std::vector<std::string> &metadata = {});
std::vector<double> read_probabilities(std::istream &in);
std::vector<double> read_probabilities(const std::filesystem::path &path);

/// `weight,intensity` rows.
std::vector<MixtureComponent> read_mixture(std::istream &in);
std::vector<MixtureComponent> read_mixture(const std::filesystem::path &path);

nlohmann::json to_json(const DetectorParams &params);
nlohmann::json to_json(const ReconstructionResult &result);
nlohmann::json to_json(const ConditioningReport &report);
ReconstructionResult reconstruction_from_json(const nlohmann::json &j);
ConditioningReport conditioning_from_json(const nlohmann::json &j);

/// Serializes a JSON tree with every float at 17 significant digits.
/// Non-finite floats become null.
std::string dump_json(const nlohmann::json &j, int indent = 2);
void write_json(const std::filesystem::path &path, const nlohmann::json &j);
nlohmann::json read_json(const std::filesystem::path &path);

}  // namespace loopdet

#endif  // LOOPDET_IO_H
