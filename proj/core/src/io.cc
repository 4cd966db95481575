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

#include "loopdet/io.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace loopdet {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing

std::string child(const std::string &location, const std::string &key) {
  return location + "/" + key;
}

void reject_unknown(const json &obj, const std::string &location,
                    const std::set<std::string> &allowed) {
  if (!obj.is_object()) throw ConfigError(location, "expected an object");
  for (const auto &[key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(child(location, key), "unknown key '" + key + "'");
  }
}

double get_real(const json &obj, const std::string &key, const std::string &location) {
  const json &v = obj.at(key);
  if (!v.is_number()) throw ConfigError(child(location, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(child(location, key), "expected a finite number");
  return d;
}

std::int64_t get_int(const json &obj, const std::string &key, const std::string &location) {
  const json &v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(child(location, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_count(const json &obj, const std::string &key, const std::string &location) {
  const json &v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(child(location, key), "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json &obj, const std::string &key, const std::string &location) {
  const json &v = obj.at(key);
  if (!v.is_string()) throw ConfigError(child(location, key), "expected a string");
  return v.get<std::string>();
}

std::filesystem::path existing_file(const json &obj, const std::string &key,
                                    const std::string &location,
                                    const std::filesystem::path &base_dir) {
  std::filesystem::path p = get_string(obj, key, location);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(child(location, key), "file '" + p.string() + "' does not exist");
  }
  return p;
}

std::filesystem::path output_path(const json &obj, const std::string &key,
                                  const std::string &location,
                                  const std::filesystem::path &base_dir) {
  std::filesystem::path p = get_string(obj, key, location);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

DetectorParams parse_detector(const json &obj, const std::string &location) {
  reject_unknown(obj, location, {"t_r", "t_c", "eta", "p_d", "L"});
  DetectorParams d;
  for (const char *key : {"t_r", "t_c", "eta", "L"}) {
    if (!obj.contains(key)) throw ConfigError(child(location, key), "required key is missing");
  }
  d.t_r = get_real(obj, "t_r", location);
  d.t_c = get_real(obj, "t_c", location);
  d.eta = get_real(obj, "eta", location);
  if (obj.contains("p_d")) d.p_d = get_real(obj, "p_d", location);
  const std::int64_t roundtrips = get_int(obj, "L", location);
  if (roundtrips < 1 || roundtrips > std::numeric_limits<int>::max()) {
    throw ConfigError(child(location, "L"), "L must be a positive integer");
  }
  d.roundtrips = static_cast<int>(roundtrips);
  try {
    d.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(location, e.what());
  }
  return d;
}

InputSpec parse_input(const json &obj, const std::string &location,
                      const std::filesystem::path &base_dir) {
  reject_unknown(obj, location, {"coherent", "fock", "distribution", "mixture"});
  if (obj.size() != 1) {
    throw ConfigError(location,
                      "exactly one of coherent, fock, distribution, mixture must be set");
  }
  if (obj.contains("coherent")) {
    const double intensity = get_real(obj, "coherent", location);
    if (intensity < 0.0) throw ConfigError(child(location, "coherent"), "intensity must be >= 0");
    return CoherentInput{intensity};
  }
  if (obj.contains("fock")) {
    const std::int64_t n = get_int(obj, "fock", location);
    if (n < 0 || n > 100000) throw ConfigError(child(location, "fock"), "photon number out of range");
    return FockInput{static_cast<int>(n)};
  }
  if (obj.contains("distribution")) {
    return DistributionFileInput{existing_file(obj, "distribution", location, base_dir)};
  }
  return MixtureFileInput{existing_file(obj, "mixture", location, base_dir)};
}

// ---------------------------------------------------------------------------
// Delimited text helpers

std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ostream &out, const std::filesystem::path &path) {
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string &cell, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (trim(cell.substr(used)).empty()) return v;
  } catch (const std::exception &) {
  }
  throw std::runtime_error(fmt::format("line {}: '{}' is not a number", line_no, cell));
}

std::uint64_t parse_count(const std::string &cell, int line_no) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(cell, &used);
    if (trim(cell.substr(used)).empty() && trim(cell).front() != '-') return v;
  } catch (const std::exception &) {
  }
  throw std::runtime_error(fmt::format("line {}: '{}' is not a count", line_no, cell));
}

// Reads '#' comment lines as key=value metadata and returns the data rows
// (header line excluded) as cell vectors.
struct Table {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::pair<int, std::vector<std::string>>> rows;
};

Table read_table(std::istream &in) {
  Table t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) t.metadata[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    if (!have_header) {
      t.header = split(line, ',');
      have_header = true;
      continue;
    }
    t.rows.emplace_back(line_no, split(line, ','));
  }
  if (!have_header) throw std::runtime_error("missing header line");
  return t;
}

// ---------------------------------------------------------------------------
// JSON emission

void emit(std::string &out, const json &j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char *nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (const auto &[key, value] : j.items()) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += json(key).dump();
        out += indent > 0 ? ": " : ":";
        emit(out, value, indent, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) {
          out += ",";
          out += nl;
        }
        out += pad;
        emit(out, j[i], indent, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_real(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

std::vector<double> real_array(const json &j, const char *key) {
  std::vector<double> out;
  for (const auto &v : j.at(key)) {
    out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(fmt::format("byte {}", e.byte), "malformed JSON document");
  }
  const std::string root;
  reject_unknown(doc, root,
                 {"detector", "input", "trials", "seed", "n_max", "sv_threshold", "workers",
                  "prior", "k_max", "optimize", "output"});
  if (!doc.contains("detector")) throw ConfigError("/detector", "required key is missing");

  RunConfig cfg;
  cfg.detector = parse_detector(doc.at("detector"), "/detector");
  if (doc.contains("input")) cfg.input = parse_input(doc.at("input"), "/input", base_dir);
  if (doc.contains("trials")) {
    cfg.trials = get_count(doc, "trials", root);
    if (cfg.trials < 1) throw ConfigError("/trials", "trials must be at least 1");
  }
  if (doc.contains("seed")) cfg.seed = get_count(doc, "seed", root);
  if (doc.contains("n_max")) {
    const std::int64_t n_max = get_int(doc, "n_max", root);
    if (n_max < 0 || n_max > 170) throw ConfigError("/n_max", "n_max must lie in 0..170");
    cfg.n_max = static_cast<int>(n_max);
  }
  if (doc.contains("sv_threshold")) {
    cfg.sv_threshold = get_real(doc, "sv_threshold", root);
    if (!(cfg.sv_threshold > 0.0 && cfg.sv_threshold < 1.0)) {
      throw ConfigError("/sv_threshold", "sv_threshold must lie in (0, 1)");
    }
  }
  if (doc.contains("workers")) {
    const std::int64_t workers = get_int(doc, "workers", root);
    if (workers < 1 || workers > 1024) throw ConfigError("/workers", "workers must lie in 1..1024");
    cfg.workers = static_cast<unsigned>(workers);
  }
  if (doc.contains("prior")) cfg.prior = existing_file(doc, "prior", root, base_dir);
  if (doc.contains("k_max")) {
    const std::int64_t k_max = get_int(doc, "k_max", root);
    if (k_max < 0) throw ConfigError("/k_max", "k_max must be nonnegative");
    cfg.k_max = static_cast<int>(k_max);
  }
  if (doc.contains("optimize")) {
    const json &o = doc.at("optimize");
    reject_unknown(o, "/optimize", {"k", "policy", "grid"});
    if (o.contains("k")) {
      const std::int64_t k = get_int(o, "k", "/optimize");
      if (k < 0) throw ConfigError("/optimize/k", "k must be nonnegative");
      cfg.optimize.k = static_cast<int>(k);
    }
    if (o.contains("policy")) {
      cfg.optimize.policy = get_string(o, "policy", "/optimize");
      if (cfg.optimize.policy != "fixed_excess_loss" && cfg.optimize.policy != "fixed_roundtrip") {
        throw ConfigError("/optimize/policy",
                          "policy must be 'fixed_excess_loss' or 'fixed_roundtrip'");
      }
    }
    if (o.contains("grid")) {
      const std::int64_t grid = get_int(o, "grid", "/optimize");
      if (grid < 1 || grid > 100000) throw ConfigError("/optimize/grid", "grid must lie in 1..100000");
      cfg.optimize.grid = static_cast<int>(grid);
    }
  }
  if (doc.contains("output")) {
    const json &o = doc.at("output");
    reject_unknown(o, "/output", {"histogram", "matrix", "result", "table", "directory"});
    if (o.contains("histogram")) cfg.output.histogram = output_path(o, "histogram", "/output", base_dir);
    if (o.contains("matrix")) cfg.output.matrix = output_path(o, "matrix", "/output", base_dir);
    if (o.contains("result")) cfg.output.result = output_path(o, "result", "/output", base_dir);
    if (o.contains("table")) cfg.output.table = output_path(o, "table", "/output", base_dir);
    if (o.contains("directory")) cfg.output.directory = output_path(o, "directory", "/output", base_dir);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

LossPolicy loss_policy(const CouplingSearch &search, const DetectorParams &detector) {
  if (search.policy == "fixed_roundtrip") return FixedRoundtrip{detector.t_r};
  return FixedExcessLoss{std::max(0.0, 1.0 - detector.t_r - detector.t_c)};
}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

// ---------------------------------------------------------------------------

void write_histogram(std::ostream &out, const CountHistogram &hist, const DetectorParams &params,
                     const std::vector<std::string> &extra_metadata) {
  hist.validate();
  out << "# loopdet count histogram\n";
  out << "# t_r=" << format_real(params.t_r) << "\n";
  out << "# t_c=" << format_real(params.t_c) << "\n";
  out << "# eta=" << format_real(params.eta) << "\n";
  out << "# p_d=" << format_real(params.p_d) << "\n";
  out << "# L=" << params.roundtrips << "\n";
  out << "# seed=" << hist.seed << "\n";
  out << "# trials=" << hist.trials << "\n";
  out << "# params_digest=" << hist.params_digest << "\n";
  for (const auto &line : extra_metadata) out << "# " << line << "\n";
  out << "k,count\n";
  for (std::size_t k = 0; k < hist.tallies.size(); ++k) out << k << "," << hist.tallies[k] << "\n";
}

void write_histogram(const std::filesystem::path &path, const CountHistogram &hist,
                     const DetectorParams &params, const std::vector<std::string> &extra_metadata) {
  auto out = open_out(path);
  write_histogram(out, hist, params, extra_metadata);
  finish(out, path);
}

HistogramFile read_histogram(std::istream &in) {
  const Table t = read_table(in);
  if (t.header.size() != 2 || trim(t.header[0]) != "k" || trim(t.header[1]) != "count") {
    throw std::runtime_error("histogram header must be 'k,count'");
  }
  HistogramFile file;
  CountHistogram &h = file.histogram;
  for (const auto &[line_no, cells] : t.rows) {
    if (cells.size() != 2) throw std::runtime_error(fmt::format("line {}: expected 2 cells", line_no));
    if (parse_count(cells[0], line_no) != h.tallies.size()) {
      throw std::runtime_error(fmt::format("line {}: rows must list k = 0, 1, 2, ... in order", line_no));
    }
    h.tallies.push_back(parse_count(cells[1], line_no));
  }
  if (h.tallies.empty()) throw std::runtime_error("histogram has no rows");
  std::uint64_t sum = 0;
  for (auto c : h.tallies) sum += c;
  h.trials = sum;
  const auto &md = t.metadata;
  if (md.count("trials") && parse_count(md.at("trials"), 0) != sum) {
    throw std::runtime_error(fmt::format("histogram tallies sum to {} but metadata says trials={}",
                                         sum, md.at("trials")));
  }
  if (md.count("seed")) h.seed = parse_count(md.at("seed"), 0);
  if (md.count("params_digest")) h.params_digest = md.at("params_digest");
  if (md.count("t_r") && md.count("t_c") && md.count("eta") && md.count("p_d") && md.count("L")) {
    DetectorParams p;
    p.t_r = parse_real(md.at("t_r"), 0);
    p.t_c = parse_real(md.at("t_c"), 0);
    p.eta = parse_real(md.at("eta"), 0);
    p.p_d = parse_real(md.at("p_d"), 0);
    p.roundtrips = static_cast<int>(parse_count(md.at("L"), 0));
    p.validate();
    file.params = p;
  }
  return file;
}

HistogramFile read_histogram(const std::filesystem::path &path) {
  auto in = open_in(path);
  return read_histogram(in);
}

void write_matrix(std::ostream &out, const ResponseMatrix &w) {
  out << "k\\n";
  for (int n = 0; n < w.cols(); ++n) out << "," << n;
  out << "\n";
  for (int k = 0; k < w.rows(); ++k) {
    out << k;
    for (int n = 0; n < w.cols(); ++n) out << "," << format_real(w(k, n));
    out << "\n";
  }
}

void write_matrix(const std::filesystem::path &path, const ResponseMatrix &w) {
  auto out = open_out(path);
  const auto &p = w.params();
  out << "# loopdet response matrix w(k|n)\n";
  out << "# t_r=" << format_real(p.t_r) << "\n# t_c=" << format_real(p.t_c)
      << "\n# eta=" << format_real(p.eta) << "\n# p_d=" << format_real(p.p_d)
      << "\n# L=" << p.roundtrips << "\n# n_max=" << w.n_max() << "\n";
  write_matrix(out, w);
  finish(out, path);
}

std::vector<std::vector<double>> read_matrix(std::istream &in) {
  const Table t = read_table(in);
  if (t.header.empty() || trim(t.header[0]) != "k\\n") {
    throw std::runtime_error("matrix header must start with 'k\\n'");
  }
  std::vector<std::vector<double>> rows;
  for (const auto &[line_no, cells] : t.rows) {
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(fmt::format("line {}: expected {} cells", line_no, t.header.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(parse_real(cells[c], line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_probabilities(std::ostream &out, std::string_view index_name,
                         std::span<const double> probs, const std::vector<std::string> &metadata) {
  for (const auto &line : metadata) out << "# " << line << "\n";
  out << index_name << ",probability\n";
  for (std::size_t i = 0; i < probs.size(); ++i) out << i << "," << format_real(probs[i]) << "\n";
}

void write_probabilities(const std::filesystem::path &path, std::string_view index_name,
                         std::span<const double> probs, const std::vector<std::string> &metadata) {
  auto out = open_out(path);
  write_probabilities(out, index_name, probs, metadata);
  finish(out, path);
}

std::vector<double> read_probabilities(std::istream &in) {
  const Table t = read_table(in);
  if (t.header.size() != 2 || trim(t.header[1]) != "probability") {
    throw std::runtime_error("probability file header must be '<index>,probability'");
  }
  std::vector<double> probs;
  for (const auto &[line_no, cells] : t.rows) {
    if (cells.size() != 2) throw std::runtime_error(fmt::format("line {}: expected 2 cells", line_no));
    if (parse_count(cells[0], line_no) != probs.size()) {
      throw std::runtime_error(fmt::format("line {}: indices must run 0, 1, 2, ... in order", line_no));
    }
    probs.push_back(parse_real(cells[1], line_no));
  }
  if (probs.empty()) throw std::runtime_error("probability file has no rows");
  return probs;
}

std::vector<double> read_probabilities(const std::filesystem::path &path) {
  auto in = open_in(path);
  try {
    return read_probabilities(in);
  } catch (const std::runtime_error &e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<MixtureComponent> read_mixture(std::istream &in) {
  const Table t = read_table(in);
  if (t.header.size() != 2 || trim(t.header[0]) != "weight" || trim(t.header[1]) != "intensity") {
    throw std::runtime_error("mixture header must be 'weight,intensity'");
  }
  std::vector<MixtureComponent> mixture;
  for (const auto &[line_no, cells] : t.rows) {
    if (cells.size() != 2) throw std::runtime_error(fmt::format("line {}: expected 2 cells", line_no));
    mixture.push_back({parse_real(cells[0], line_no), parse_real(cells[1], line_no)});
  }
  return mixture;
}

std::vector<MixtureComponent> read_mixture(const std::filesystem::path &path) {
  auto in = open_in(path);
  return read_mixture(in);
}

// ---------------------------------------------------------------------------

json to_json(const DetectorParams &params) {
  return {{"t_r", params.t_r}, {"t_c", params.t_c}, {"eta", params.eta},
          {"p_d", params.p_d}, {"L", params.roundtrips}};
}

json to_json(const ReconstructionResult &result) {
  json j = {{"rho_hat", result.rho_hat},
            {"std_errors", result.std_errors},
            {"sum_std_error", result.sum_std_error},
            {"n_max", result.n_max},
            {"sv_threshold", result.sv_threshold},
            {"residual_norm", result.residual_norm},
            {"numerical_rank", result.numerical_rank},
            {"rank_deficient", result.rank_deficient}};
  j["trials"] = result.trials ? json(*result.trials) : json(nullptr);
  return j;
}

json to_json(const ConditioningReport &report) {
  return {{"singular_values", report.singular_values},
          {"condition_number", report.condition_number},
          {"numerical_rank", report.numerical_rank},
          {"invertible", report.invertible},
          {"sv_threshold", report.sv_threshold}};
}

ReconstructionResult reconstruction_from_json(const json &j) {
  ReconstructionResult r;
  r.rho_hat = real_array(j, "rho_hat");
  r.std_errors = real_array(j, "std_errors");
  r.sum_std_error = j.at("sum_std_error").get<double>();
  r.n_max = j.at("n_max").get<int>();
  r.sv_threshold = j.at("sv_threshold").get<double>();
  r.residual_norm = j.at("residual_norm").get<double>();
  r.numerical_rank = j.at("numerical_rank").get<int>();
  r.rank_deficient = j.at("rank_deficient").get<bool>();
  if (!j.at("trials").is_null()) r.trials = j.at("trials").get<std::uint64_t>();
  return r;
}

ConditioningReport conditioning_from_json(const json &j) {
  ConditioningReport r;
  r.singular_values = real_array(j, "singular_values");
  r.condition_number = j.at("condition_number").is_null()
                           ? std::numeric_limits<double>::infinity()
                           : j.at("condition_number").get<double>();
  r.numerical_rank = j.at("numerical_rank").get<int>();
  r.invertible = j.at("invertible").get<bool>();
  r.sv_threshold = j.at("sv_threshold").get<double>();
  return r;
}

std::string dump_json(const json &j, int indent) {
  std::string out;
  emit(out, j, indent, 0);
  out += "\n";
  return out;
}

void write_json(const std::filesystem::path &path, const json &j) {
  auto out = open_out(path);
  out << dump_json(j);
  finish(out, path);
}

json read_json(const std::filesystem::path &path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace loopdet
