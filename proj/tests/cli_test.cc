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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "loopdet/io.h"

using namespace loopdet;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "loopdet");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("loopdet_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }

  std::string write_config(const std::string &name, const std::string &text) {
    std::ofstream(dir_ / name) << text;
    return (dir_ / name).string();
  }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

const char *kCoherent = R"({
  "detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "p_d": 0.0, "L": 50},
  "input": {"coherent": 1.0},
  "trials": 20000,
  "seed": 9,
  "n_max": 5
})";

}  // namespace

TEST_F(CliTest, simulate_output_feeds_reconstruct) {
  const auto cfg = write_config("run.json", kCoherent);
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--out", path("h.csv")}).code, 0);
  const auto hist = read_histogram(std::filesystem::path(path("h.csv")));
  EXPECT_EQ(hist.histogram.trials, 20000u);
  EXPECT_EQ(hist.histogram.seed, 9u);

  const auto r = run_cli({"reconstruct", "--config", cfg, "--input", path("h.csv"), "--out", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = read_json(path("r.json"));
  EXPECT_EQ(doc.at("reconstruction").at("rho_hat").size(), 6u);
  EXPECT_EQ(doc.at("seed").get<int>(), 9);
  EXPECT_TRUE(doc.at("conditioning").at("invertible").get<bool>());
  EXPECT_EQ(doc.at("params_digest").get<std::string>(), hist.histogram.params_digest);
}

TEST_F(CliTest, exact_probabilities_roundtrip) {
  const auto cfg = write_config("run.json", kCoherent);
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--exact", "--out", path("p.csv")}).code, 0);
  const auto r = run_cli({"reconstruct", "--config", cfg, "--exact", "--input", path("p.csv"),
                          "--n-max", "12", "--out", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rho = read_json(path("r.json")).at("reconstruction").at("rho_hat");
  // Poisson(1) mass above n = 12 is ~1e-10; conditioning amplifies it.
  EXPECT_NEAR(rho[0].get<double>(), std::exp(-1.0), 1e-6);
  EXPECT_NEAR(rho[2].get<double>(), std::exp(-1.0) / 2, 1e-6);
}

TEST_F(CliTest, deterministic_given_seed_and_workers) {
  const auto cfg = write_config("run.json", kCoherent);
  ASSERT_EQ(run_cli({"simulate", "-c", cfg, "-o", path("a.csv")}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "-c", cfg, "-o", path("b.csv"), "--workers", "4"}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "-c", cfg, "-o", path("c.csv"), "--seed", "10"}).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, response_matrix_to_stdout) {
  const auto cfg = write_config("run.json", kCoherent);
  const auto r = run_cli({"response", "-c", cfg, "--n-max", "2"});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  const auto rows = read_matrix(in);
  ASSERT_EQ(rows.size(), 51u);
  EXPECT_EQ(rows[0][0], 1.0);
}

TEST_F(CliTest, check_strict_exit_codes) {
  const auto good = write_config("good.json", kCoherent);
  EXPECT_EQ(run_cli({"check", "-c", good, "--strict"}).code, 0);
  const auto dead = write_config(
      "dead.json", R"({"detector": {"t_r": 0.72, "t_c": 0.0, "eta": 0.8, "L": 50}, "n_max": 5})");
  const auto r = run_cli({"check", "-c", dead, "--strict", "-o", path("c.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(read_json(path("c.json")).at("conditioning").at("invertible").get<bool>());
  EXPECT_EQ(run_cli({"check", "-c", dead}).code, 0);

  ASSERT_EQ(run_cli({"simulate", "-c", good, "-o", path("h.csv")}).code, 0);
  // Histogram made with a different detector is refused.
  EXPECT_EQ(run_cli({"reconstruct", "-c", dead, "-i", path("h.csv")}).code, 1);
}

TEST_F(CliTest, reconstruct_strict_on_rank_deficiency) {
  const auto cfg = write_config(
      "wide.json", R"({"detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "L": 3},
                       "input": {"fock": 1}, "trials": 1000, "n_max": 5})");
  ASSERT_EQ(run_cli({"simulate", "-c", cfg, "-o", path("h.csv")}).code, 0);
  EXPECT_EQ(run_cli({"reconstruct", "-c", cfg, "-i", path("h.csv"), "-o", path("r.json")}).code, 0);
  EXPECT_TRUE(read_json(path("r.json")).at("reconstruction").at("rank_deficient").get<bool>());
  EXPECT_EQ(run_cli({"reconstruct", "-c", cfg, "-i", path("h.csv"), "--strict", "-o", path("r.json")}).code, 2);
}

TEST_F(CliTest, usage_and_config_errors_exit_1) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"simulate"}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "-c", path("missing.json")}).code, 1);
  const auto bad = write_config("bad.json", R"({"detector": {"t_r": 0.9, "t_c": 0.2, "eta": 0.8, "L": 5}})");
  const auto r = run_cli({"check", "-c", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/detector"), std::string::npos) << r.err;
  const auto no_input = write_config("noinput.json", R"({"detector": {"t_r": 0.5, "t_c": 0.2, "eta": 0.8, "L": 5}})");
  EXPECT_EQ(run_cli({"simulate", "-c", no_input}).code, 1);
}

TEST_F(CliTest, confidence_table) {
  write_probabilities(dir_ / "prior.csv", "n", std::vector<double>{0.5, 0.3, 0.2});
  const auto cfg = write_config(
      "conf.json", R"({"detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "L": 50}, "prior": "prior.csv"})");
  const auto r = run_cli({"confidence", "-c", cfg});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("k,confidence\n0,"), std::string::npos);
  EXPECT_NE(r.out.find("\n2,"), std::string::npos);
  EXPECT_EQ(r.out.find("\n3,"), std::string::npos);
}

TEST_F(CliTest, optimize_curve_and_optimum) {
  const auto cfg = write_config(
      "opt.json", R"({"detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "L": 50},
                      "input": {"coherent": 1.0}, "n_max": 10,
                      "optimize": {"k": 2, "grid": 200}})");
  const auto r = run_cli({"optimize", "-c", cfg, "-o", path("curve.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("t_c_star=0.2795"), std::string::npos) << r.out;
  const auto text = slurp(path("curve.csv"));
  EXPECT_NE(text.find("t_c,confidence\n"), std::string::npos);
  EXPECT_NE(text.find("# confidence_star=0.6033654309384"), std::string::npos);
}

TEST_F(CliTest, mixture_and_distribution_inputs) {
  std::ofstream(dir_ / "mix.csv") << "weight,intensity\n0.5,0.5\n0.5,1.5\n";
  write_probabilities(dir_ / "rho.csv", "n", std::vector<double>{0.2, 0.5, 0.3});
  const auto mix = write_config(
      "mix.json", R"({"detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "L": 10},
                      "input": {"mixture": "mix.csv"}, "trials": 5000})");
  const auto dist = write_config(
      "dist.json", R"({"detector": {"t_r": 0.72, "t_c": 0.2, "eta": 0.8, "L": 10},
                       "input": {"distribution": "rho.csv"}, "trials": 5000, "n_max": 2})");
  for (const auto &cfg : {mix, dist}) {
    EXPECT_EQ(run_cli({"simulate", "-c", cfg, "-o", path("h.csv")}).code, 0);
    EXPECT_EQ(run_cli({"simulate", "-c", cfg, "--exact", "-o", path("p.csv")}).code, 0);
    EXPECT_EQ(read_histogram(std::filesystem::path(path("h.csv"))).histogram.trials, 5000u);
  }
}

TEST_F(CliTest, fig2_outputs) {
  const auto r = run_cli({"fig2", "--out-dir", path("fig2"), "--trials", "20000"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char *name : {"fig2_coherent_histogram.csv", "fig2_coherent_result.json",
                           "fig2_fock_histogram.csv", "fig2_fock_result.json", "fig2_comparison.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "fig2" / name)) << name;
  }
  const auto doc = read_json(dir_ / "fig2" / "fig2_coherent_result.json");
  EXPECT_EQ(doc.at("reconstruction").at("rho_hat").size(), 6u);
  const auto hist = read_histogram(dir_ / "fig2" / "fig2_fock_histogram.csv");
  EXPECT_EQ(hist.histogram.trials, 20000u);
}
