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

#include "cli.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "loopdet/io.h"
#include "loopdet/metrics.h"
#include "loopdet/reconstruction.h"
#include "loopdet/response.h"
#include "loopdet/simulator.h"

namespace loopdet::cli {

namespace {

using nlohmann::json;

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> n_max;
  std::optional<unsigned> workers;
  std::optional<double> sv_threshold;

  void apply(RunConfig &cfg) const {
    if (seed) cfg.seed = *seed;
    if (trials) {
      if (*trials < 1) throw ConfigError("--trials", "trials must be at least 1");
      cfg.trials = *trials;
    }
    if (n_max) {
      if (*n_max < 0 || *n_max > 170) throw ConfigError("--n-max", "n_max must lie in 0..170");
      cfg.n_max = *n_max;
    }
    if (workers) {
      if (*workers < 1) throw ConfigError("--workers", "workers must be at least 1");
      cfg.workers = *workers;
    }
    if (sv_threshold) {
      if (!(*sv_threshold > 0.0 && *sv_threshold < 1.0)) {
        throw ConfigError("--sv-threshold", "sv_threshold must lie in (0, 1)");
      }
      cfg.sv_threshold = *sv_threshold;
    }
  }
};

void add_overrides(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--trials", o.trials, "Number of simulated trials");
  cmd->add_option("--n-max", o.n_max, "Photon-number truncation");
  cmd->add_option("--workers", o.workers, "Simulation threads");
  cmd->add_option("--sv-threshold", o.sv_threshold, "Relative singular-value cutoff");
}

RunConfig load(const std::string &path, const Overrides &o) {
  RunConfig cfg = load_config(path);
  o.apply(cfg);
  return cfg;
}

// Writes to `path` or, when it is empty or "-", to `out`.
template <typename Writer>
void emit_to(const std::optional<std::filesystem::path> &path, std::ostream &out, Writer &&write) {
  if (!path || path->empty() || *path == "-") {
    write(out);
    return;
  }
  if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
  std::ofstream file(*path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path->string() + "' for writing");
  write(file);
  file.flush();
  if (!file) throw std::runtime_error("write to '" + path->string() + "' failed");
}

std::optional<std::filesystem::path> pick(const std::string &flag,
                                          const std::optional<std::filesystem::path> &configured) {
  if (!flag.empty()) return std::filesystem::path(flag);
  return configured;
}

std::vector<std::string> detector_metadata(const DetectorParams &p) {
  return {"t_r=" + format_real(p.t_r), "t_c=" + format_real(p.t_c), "eta=" + format_real(p.eta),
          "p_d=" + format_real(p.p_d), "L=" + std::to_string(p.roundtrips),
          "params_digest=" + p.digest()};
}

std::string describe_input(const InputSpec &input) {
  return std::visit(
      [](const auto &in) -> std::string {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, CoherentInput>) {
          return "coherent:" + format_real(in.intensity);
        } else if constexpr (std::is_same_v<T, FockInput>) {
          return "fock:" + std::to_string(in.photons);
        } else if constexpr (std::is_same_v<T, DistributionFileInput>) {
          return "distribution:" + in.path.filename().string();
        } else {
          return "mixture:" + in.path.filename().string();
        }
      },
      input);
}

const InputSpec &require_input(const RunConfig &cfg) {
  if (!cfg.input) throw ConfigError("/input", "this command needs an input");
  return *cfg.input;
}

// Photon-number distribution of the configured input, truncated at n_max
// (files keep their own length).
PhotonNumberDistribution input_distribution(const RunConfig &cfg) {
  return std::visit(
      [&](const auto &in) -> PhotonNumberDistribution {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, CoherentInput>) {
          return PhotonNumberDistribution::truncated_poisson(in.intensity, cfg.n_max);
        } else if constexpr (std::is_same_v<T, FockInput>) {
          return PhotonNumberDistribution::fock(in.photons, std::max(cfg.n_max, in.photons));
        } else if constexpr (std::is_same_v<T, DistributionFileInput>) {
          return PhotonNumberDistribution(read_probabilities(in.path));
        } else {
          const auto mixture = read_mixture(in.path);
          std::vector<double> rho(static_cast<std::size_t>(cfg.n_max + 1), 0.0);
          for (const auto &c : mixture) {
            const auto part = poisson_pmf(c.intensity, cfg.n_max);
            for (std::size_t n = 0; n < rho.size(); ++n) rho[n] += c.weight * part[n];
          }
          double total = 0.0;
          for (double r : rho) total += r;
          for (double &r : rho) r /= total;
          return PhotonNumberDistribution(std::move(rho));
        }
      },
      require_input(cfg));
}

PhotonNumberDistribution prior_distribution(const RunConfig &cfg, const std::string &flag) {
  if (!flag.empty()) return PhotonNumberDistribution(read_probabilities(std::filesystem::path(flag)));
  if (cfg.prior) return PhotonNumberDistribution(read_probabilities(*cfg.prior));
  return input_distribution(cfg);
}

SimulationOptions sim_options(const RunConfig &cfg) {
  SimulationOptions o;
  o.trials = cfg.trials;
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  return o;
}

CountHistogram simulate_input(const RunConfig &cfg) {
  const auto options = sim_options(cfg);
  return std::visit(
      [&](const auto &in) -> CountHistogram {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, CoherentInput>) {
          return simulate_coherent(cfg.detector, in.intensity, options);
        } else if constexpr (std::is_same_v<T, FockInput>) {
          return simulate_fock(cfg.detector, in.photons, options);
        } else if constexpr (std::is_same_v<T, DistributionFileInput>) {
          return simulate_distribution(cfg.detector, PhotonNumberDistribution(read_probabilities(in.path)),
                                       options);
        } else {
          const auto mixture = read_mixture(in.path);
          return simulate_mixture(cfg.detector, mixture, options);
        }
      },
      require_input(cfg));
}

CountDistribution exact_counts(const RunConfig &cfg) {
  return std::visit(
      [&](const auto &in) -> CountDistribution {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, CoherentInput>) {
          return count_distribution_coherent(cfg.detector, in.intensity);
        } else if constexpr (std::is_same_v<T, MixtureFileInput>) {
          const auto mixture = read_mixture(in.path);
          return count_distribution_mixture(cfg.detector, mixture);
        } else {
          const auto rho = input_distribution(cfg);
          return forward_counts(response_matrix(cfg.detector, rho.n_max()), rho);
        }
      },
      require_input(cfg));
}

json result_document(const std::string &command, const DetectorParams &detector,
                     const ReconstructionResult &result, const ConditioningReport &report,
                     std::optional<std::uint64_t> seed) {
  json doc;
  doc["command"] = command;
  doc["detector"] = to_json(detector);
  doc["params_digest"] = detector.digest();
  doc["seed"] = seed ? json(*seed) : json(nullptr);
  doc["reconstruction"] = to_json(result);
  doc["conditioning"] = to_json(report);
  return doc;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_response(const RunConfig &cfg, const std::optional<std::filesystem::path> &out_path,
                 std::ostream &out) {
  const auto w = response_matrix(cfg.detector, cfg.n_max);
  if (out_path && !out_path->empty() && *out_path != "-") {
    write_matrix(*out_path, w);
  } else {
    write_matrix(out, w);
  }
  return kSuccess;
}

int cmd_simulate(const RunConfig &cfg, bool exact,
                 const std::optional<std::filesystem::path> &out_path, std::ostream &out) {
  const std::string input = describe_input(require_input(cfg));
  if (exact) {
    const auto probs = exact_counts(cfg);
    auto meta = detector_metadata(cfg.detector);
    meta.insert(meta.begin(), "loopdet exact click probabilities");
    meta.push_back("input=" + input);
    emit_to(out_path, out, [&](std::ostream &s) { write_probabilities(s, "k", probs.probs(), meta); });
    return kSuccess;
  }
  const auto hist = simulate_input(cfg);
  emit_to(out_path, out,
          [&](std::ostream &s) { write_histogram(s, hist, cfg.detector, {"input=" + input}); });
  return kSuccess;
}

int cmd_reconstruct(const RunConfig &cfg, const std::string &input_path, bool exact, bool strict,
                    const std::optional<std::filesystem::path> &out_path, std::ostream &out) {
  const auto w = response_matrix(cfg.detector, cfg.n_max);
  ReconstructionResult result;
  std::optional<std::uint64_t> seed;
  if (exact) {
    const auto probs = read_probabilities(std::filesystem::path(input_path));
    result = reconstruct_svd(w, probs, std::nullopt, cfg.sv_threshold);
  } else {
    const auto file = read_histogram(std::filesystem::path(input_path));
    if (file.params && !(*file.params == cfg.detector)) {
      throw ConfigError("/detector", "histogram '" + input_path +
                                         "' was produced with different detector parameters");
    }
    seed = file.histogram.seed;
    result = reconstruct_svd(w, file.histogram, cfg.sv_threshold);
  }
  const auto report = condition_diagnostics(w, cfg.sv_threshold);
  const json doc = result_document("reconstruct", cfg.detector, result, report, seed);
  emit_to(out_path, out, [&](std::ostream &s) { s << dump_json(doc); });
  if (strict && result.rank_deficient) {
    throw NumericalFailure(fmt::format("response matrix is rank deficient (rank {} of {})",
                                       result.numerical_rank, w.cols()));
  }
  return kSuccess;
}

int cmd_check(const RunConfig &cfg, bool strict,
              const std::optional<std::filesystem::path> &out_path, std::ostream &out) {
  const auto w = response_matrix(cfg.detector, cfg.n_max);
  const auto report = condition_diagnostics(w, cfg.sv_threshold);
  json doc;
  doc["command"] = "check";
  doc["detector"] = to_json(cfg.detector);
  doc["params_digest"] = cfg.detector.digest();
  doc["n_max"] = cfg.n_max;
  doc["conditioning"] = to_json(report);
  emit_to(out_path, out, [&](std::ostream &s) { s << dump_json(doc); });
  if (strict && !report.invertible) {
    throw NumericalFailure(fmt::format("response matrix is singular at n_max={} (rank {})",
                                       cfg.n_max, report.numerical_rank));
  }
  return kSuccess;
}

int cmd_confidence(const RunConfig &cfg, const std::string &prior_flag, std::optional<int> k_max_flag,
                   const std::optional<std::filesystem::path> &out_path, std::ostream &out) {
  const auto prior = prior_distribution(cfg, prior_flag);
  const auto w = response_matrix(cfg.detector, std::max(cfg.n_max, prior.n_max()));
  const int k_max = k_max_flag.value_or(cfg.k_max.value_or(std::min(prior.n_max(), w.max_clicks())));
  if (k_max < 0 || k_max > std::min(prior.n_max(), w.max_clicks())) {
    throw ConfigError("/k_max", fmt::format("k_max must lie in 0..{}",
                                            std::min(prior.n_max(), w.max_clicks())));
  }
  auto meta = detector_metadata(cfg.detector);
  meta.insert(meta.begin(), "loopdet confidence table");
  meta.push_back("prior_n_max=" + std::to_string(prior.n_max()));
  emit_to(out_path, out, [&](std::ostream &s) {
    for (const auto &line : meta) s << "# " << line << "\n";
    s << "k,confidence\n";
    for (int k = 0; k <= k_max; ++k) {
      std::string value = "nan";
      try {
        value = format_real(confidence(w, prior, k));
      } catch (const UndefinedEvent &) {
      }
      s << k << "," << value << "\n";
    }
  });
  return kSuccess;
}

int cmd_optimize(const RunConfig &cfg, const std::string &prior_flag,
                 const std::optional<std::filesystem::path> &out_path, std::ostream &out) {
  const auto prior = prior_distribution(cfg, prior_flag);
  const auto policy = loss_policy(cfg.optimize, cfg.detector);
  const auto best = optimize_coupling(cfg.detector, prior, cfg.optimize.k, policy, cfg.optimize.grid);
  auto meta = detector_metadata(cfg.detector);
  meta.insert(meta.begin(), "loopdet coupling scan");
  meta.push_back("k=" + std::to_string(cfg.optimize.k));
  meta.push_back("policy=" + cfg.optimize.policy);
  meta.push_back("t_c_star=" + format_real(best.t_c));
  meta.push_back("confidence_star=" + format_real(best.confidence));
  meta.push_back(std::string("plateau=") + (best.plateau ? "true" : "false"));
  emit_to(out_path, out, [&](std::ostream &s) {
    for (const auto &line : meta) s << "# " << line << "\n";
    s << "t_c,confidence\n";
    for (const auto &sample : best.curve) {
      s << format_real(sample.t_c) << "," << format_real(sample.confidence) << "\n";
    }
  });
  if (out_path && !out_path->empty() && *out_path != "-") {
    out << "t_c_star=" << format_real(best.t_c) << " confidence_star=" << format_real(best.confidence)
        << (best.plateau ? " (plateau)" : "") << "\n";
  }
  return kSuccess;
}

// Absolute slack for solver roundoff when a standard error is exactly zero.
constexpr double kRoundoffFloor = 1e-12;

struct PanelOutcome {
  std::string name;
  std::vector<double> exact;
  ReconstructionResult result;
};

int cmd_fig2(const RunConfig &cfg, const std::filesystem::path &dir, bool strict, std::ostream &out) {
  std::filesystem::create_directories(dir);
  const auto w = response_matrix(cfg.detector, cfg.n_max);
  const auto report = condition_diagnostics(w, cfg.sv_threshold);
  const auto options = sim_options(cfg);

  std::vector<PanelOutcome> panels;
  auto run_panel = [&](const std::string &name, const CountHistogram &hist, std::vector<double> exact,
                       const std::string &input) {
    write_histogram(dir / ("fig2_" + name + "_histogram.csv"), hist, cfg.detector,
                    {"input=" + input, "panel=" + name});
    const auto result = reconstruct_svd(w, hist, cfg.sv_threshold);
    write_json(dir / ("fig2_" + name + "_result.json"),
               result_document("fig2", cfg.detector, result, report, hist.seed));
    panels.push_back({name, std::move(exact), result});
  };
  run_panel("coherent", simulate_coherent(cfg.detector, 1.0, options), poisson_pmf(1.0, cfg.n_max),
            "coherent:1");
  std::vector<double> single(static_cast<std::size_t>(cfg.n_max + 1), 0.0);
  if (cfg.n_max >= 1) single[1] = 1.0;
  run_panel("fock", simulate_fock(cfg.detector, 1, options), single, "fock:1");

  std::ofstream table(dir / "fig2_comparison.csv", std::ios::binary);
  if (!table) throw std::runtime_error("cannot write comparison table in '" + dir.string() + "'");
  for (const auto &line : detector_metadata(cfg.detector)) table << "# " << line << "\n";
  table << "# trials=" << cfg.trials << "\n# seed=" << cfg.seed << "\n# n_max=" << cfg.n_max << "\n";
  table << "panel,n,exact,rho_hat,std_error,within_3_sigma\n";
  bool all_within = true;
  out << fmt::format("{:<9} {:>2} {:>10} {:>11} {:>10}\n", "panel", "n", "exact", "rho_hat", "std_error");
  for (const auto &panel : panels) {
    for (int n = 0; n <= cfg.n_max; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double rho = panel.result.rho_hat[i];
      const double se = panel.result.std_errors[i];
      const bool within = std::abs(rho - panel.exact[i]) <= 3.0 * se + kRoundoffFloor;
      all_within = all_within && within;
      table << panel.name << "," << n << "," << format_real(panel.exact[i]) << "," << format_real(rho)
            << "," << format_real(se) << "," << (within ? "true" : "false") << "\n";
      out << fmt::format("{:<9} {:>2} {:>10.6f} {:>11.6f} {:>10.6f}{}\n", panel.name, n,
                         panel.exact[i], rho, se, within ? "" : "  *");
    }
  }
  table.flush();
  if (!table) throw std::runtime_error("write to comparison table failed");
  if (strict && !report.invertible) {
    throw NumericalFailure("response matrix is singular for the configured truncation");
  }
  out << (all_within ? "all estimates within 3 standard errors\n"
                     : "some estimates outside 3 standard errors (marked *)\n");
  return kSuccess;
}

RunConfig fig2_defaults() {
  RunConfig cfg;
  cfg.detector = DetectorParams{0.72, 0.2, 0.8, 0.0, 50};
  cfg.trials = 100000;
  cfg.seed = 0;
  cfg.n_max = 5;
  return cfg;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Loop photon-counting detector: response, simulation and reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "loopdet 0.1.0");

  std::string config_path;
  std::string out_flag;
  std::string input_flag;
  std::string prior_flag;
  bool exact = false;
  bool strict = false;
  std::optional<int> k_max;
  std::optional<int> k_flag;
  std::string policy_flag;
  std::optional<int> grid_flag;
  Overrides overrides;

  auto with_config = [&](CLI::App *cmd, bool required = true) {
    auto *opt = cmd->add_option("-c,--config", config_path, "JSON run configuration");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
    add_overrides(cmd, overrides);
    cmd->add_option("-o,--out", out_flag, "Output file ('-' for stdout)");
  };

  auto *response = app.add_subcommand("response", "Write the response matrix w(k|n)");
  with_config(response);

  auto *simulate = app.add_subcommand("simulate", "Simulate a click histogram for the configured input");
  with_config(simulate);
  simulate->add_flag("--exact", exact, "Write exact click probabilities instead of a simulated histogram");

  auto *reconstruct = app.add_subcommand("reconstruct", "Reconstruct rho(n) from a histogram");
  with_config(reconstruct);
  reconstruct->add_option("-i,--input", input_flag, "Histogram (or probabilities with --exact)")
      ->required()
      ->check(CLI::ExistingFile);
  reconstruct->add_flag("--exact", exact, "Input holds exact probabilities (k,probability)");
  reconstruct->add_flag("--strict", strict, "Exit with status 2 if the matrix is rank deficient");

  auto *conf = app.add_subcommand("confidence", "Tabulate the confidence C_k");
  with_config(conf);
  conf->add_option("--prior", prior_flag, "Prior distribution file (n,probability)")
      ->check(CLI::ExistingFile);
  conf->add_option("--k-max", k_max, "Largest click count to tabulate");

  auto *optimize = app.add_subcommand("optimize", "Scan and maximize C_k over the coupler fraction");
  with_config(optimize);
  optimize->add_option("--prior", prior_flag, "Prior distribution file (n,probability)")
      ->check(CLI::ExistingFile);
  optimize->add_option("--k", k_flag, "Target click count");
  optimize->add_option("--policy", policy_flag, "fixed_excess_loss or fixed_roundtrip")
      ->check(CLI::IsMember({"fixed_excess_loss", "fixed_roundtrip"}));
  optimize->add_option("--grid", grid_flag, "Number of grid points")->check(CLI::Range(1, 100000));

  auto *check = app.add_subcommand("check", "Singular-value test of the response matrix");
  with_config(check);
  check->add_flag("--strict", strict, "Exit with status 2 if the matrix is singular");

  auto *fig2 = app.add_subcommand("fig2", "Simulate and reconstruct coherent and single-photon inputs");
  with_config(fig2, false);
  std::string dir_flag;
  fig2->add_option("-d,--out-dir", dir_flag, "Directory for histograms, results and comparison table");
  fig2->add_flag("--strict", strict, "Exit with status 2 if the matrix is singular");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (fig2->parsed()) {
      RunConfig cfg = config_path.empty() ? fig2_defaults() : load_config(config_path);
      overrides.apply(cfg);
      std::filesystem::path dir = !dir_flag.empty() ? std::filesystem::path(dir_flag)
                                  : cfg.output.directory ? *cfg.output.directory
                                                         : std::filesystem::path("fig2_output");
      return cmd_fig2(cfg, dir, strict, out);
    }
    RunConfig cfg = load(config_path, overrides);
    if (response->parsed()) return cmd_response(cfg, pick(out_flag, cfg.output.matrix), out);
    if (simulate->parsed()) return cmd_simulate(cfg, exact, pick(out_flag, cfg.output.histogram), out);
    if (reconstruct->parsed()) {
      return cmd_reconstruct(cfg, input_flag, exact, strict, pick(out_flag, cfg.output.result), out);
    }
    if (conf->parsed()) return cmd_confidence(cfg, prior_flag, k_max, pick(out_flag, cfg.output.table), out);
    if (optimize->parsed()) {
      if (k_flag) cfg.optimize.k = *k_flag;
      if (!policy_flag.empty()) cfg.optimize.policy = policy_flag;
      if (grid_flag) cfg.optimize.grid = *grid_flag;
      return cmd_optimize(cfg, prior_flag, pick(out_flag, cfg.output.table), out);
    }
    if (check->parsed()) return cmd_check(cfg, strict, pick(out_flag, cfg.output.result), out);
  } catch (const NumericalFailure &e) {
    err << "loopdet: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const ConfigError &e) {
    err << "loopdet: config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const UndefinedEvent &e) {
    err << "loopdet: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception &e) {
    err << "loopdet: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace loopdet::cli
