/*
 * Copyright (c) 2026, The rare-sorm authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end runs of the command-line tool.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::path(RARE_SORM_TEST_WORKDIR) / "cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code = -1;
  std::string err;
};

Run run(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path err = kWork / "stderr.txt";
  const std::string cmd = std::string("\"") + RARE_SORM_CLI + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string out_dir(const std::string& name) {
  const fs::path d = kWork / name;
  fs::remove_all(d);
  return d.string();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

double euler_ou_variance(int nt, double T) {
  const double dt = T / nt, a = 1.0 - dt;
  double v = 0.0;
  for (int k = 0; k < nt; ++k) v = a * a * v + dt;
  return v;
}

}  // namespace

TEST_CASE("usage errors exit with the configuration code") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("prefactor").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("malformed JSON reports line and column") {
  const auto cfg = write("bad.json", "{\"model\": \"additive_ou\",\n \"nt\": 100,\n \"z\": }\n");
  auto r = run("prefactor --config " + cfg.string() + " --out " + out_dir("bad"));
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.json:3:") != std::string::npos);
}

TEST_CASE("missing fields are named") {
  const auto cfg = write("missing.json", R"({"model": "additive_ou", "nt": 100})");
  auto r = run("prefactor --config " + cfg.string() + " --out " + out_dir("missing"));
  CHECK(r.code == 1);
  CHECK(r.err.find("missing required field 'z'") != std::string::npos);

  const auto cfg2 = write("unknown.json", R"({"model": "no_such_model", "z": 1.0})");
  CHECK(run("prefactor --config " + cfg2.string() + " --out " + out_dir("unknown")).code == 1);
}

TEST_CASE("OU prefactor output") {
  const auto cfg = write("ou.json", R"({"model": "additive_ou", "nt": 1000, "z": 1.0, "M": 10})");
  const auto out = out_dir("ou");
  REQUIRE(run("prefactor --config " + cfg.string() + " --out " + out).code == 0);
  const json b = json::parse(slurp(fs::path(out) / "breakdown.json"));
  const double I = b.at("I_z").get<double>();
  CHECK(I == doctest::Approx(1.0 / (2.0 * euler_ou_variance(1000, 1.0))).epsilon(1e-5));
  CHECK(b.at("det2_projected").get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(b.at("C_z").get<double>() == doctest::Approx(std::pow(2.0 * I, -0.5)).epsilon(1e-8));
  const std::string csv = slurp(fs::path(out) / "breakdown.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "z,lambda_z,I_z,det2_projected,trace_reg_projected,quad_atilde,C_z");
  CHECK(count_lines(csv) == 2);
}

TEST_CASE("saved instanton reproduces the breakdown bit for bit") {
  const auto cfg = write("pp.json", R"({"model": "predator_prey", "nt": 250, "z": 1.0, "M": 30})");
  const auto inst = out_dir("pp_inst");
  const auto direct = out_dir("pp_direct");
  REQUIRE(run("instanton --config " + cfg.string() + " --out " + inst).code == 0);
  REQUIRE(run("prefactor --config " + cfg.string() + " --out " + direct + " --emit-spectrum").code == 0);

  const json saved = json::parse(slurp(fs::path(inst) / "instanton.json"));
  CHECK(saved.at("converged").get<bool>());
  CHECK(saved.at("eta").size() == 500);
  CHECK(count_lines(slurp(fs::path(inst) / "phi.csv")) == 252);

  const auto cfg2 = write("pp_load.json", R"({"instanton": "pp_inst/instanton.json", "M": 30})");
  const auto loaded = out_dir("pp_loaded");
  REQUIRE(run("prefactor --config " + cfg2.string() + " --out " + loaded).code == 0);
  CHECK(slurp(fs::path(loaded) / "breakdown.csv") == slurp(fs::path(direct) / "breakdown.csv"));

  // header plus one row per retained eigenvalue
  CHECK(count_lines(slurp(fs::path(direct) / "spectrum.csv")) == 31);
}

TEST_CASE("nondegeneracy violation exits with the validity code") {
  json inst = {{"model", "geometric_bm"}, {"params", json::object()}, {"mode", "mgf"}, {"nt", 100},
               {"z", 0.0},              {"lambda_z", 0.6},             {"iterations", 0}, {"converged", true},
               {"eta", std::vector<double>(100, 0.0)}};
  write("gbm_zero.json", inst.dump());
  const auto cfg = write("gbm_cfg.json", R"({"instanton": "gbm_zero.json", "M": 10})");
  auto r = run("prefactor --config " + cfg.string() + " --out " + out_dir("gbm_bad"));
  CHECK(r.code == 3);
  CHECK(r.err.find(">= 1") != std::string::npos);
}

TEST_CASE("geometric BM MGF mode") {
  const double lambda = 0.2;
  const auto cfg = write("gbm_mgf.json", R"({"model": "geometric_bm", "mode": "mgf", "lambda": 0.2, "nt": 1000, "M": 20})");
  const auto out = out_dir("gbm_mgf");
  REQUIRE(run("instanton --config " + cfg.string() + " --out " + out).code == 0);
  const json s = json::parse(slurp(fs::path(out) / "instanton.json"));
  // continuum optimum: constant noise a = -sqrt(2) lambda / (1 - 2 lambda)
  const double a = -std::numbers::sqrt2 * lambda / (1.0 - 2.0 * lambda);
  CHECK(s.at("rate").get<double>() == doctest::Approx(0.5 * a * a).epsilon(1e-2));
  REQUIRE(run("prefactor --config " + cfg.string() + " --out " + out).code == 0);
  const json m = json::parse(slurp(fs::path(out) / "mgf_prefactor.json"));
  CHECK(m.at("R").get<double>() > 0.0);
}

TEST_CASE("estimate from a saved breakdown") {
  const auto cfg = write("ou2.json", R"({"model": "additive_ou", "nt": 200, "z": 1.0, "M": 5})");
  REQUIRE(run("prefactor --config " + cfg.string() + " --out " + out_dir("ou2")).code == 0);
  const auto est = write("est.json", R"({"breakdown": "ou2/breakdown.json", "epsilons": [0.05, 0.1]})");
  const auto out = out_dir("est");
  REQUIRE(run("estimate --config " + est.string() + " --out " + out).code == 0);
  const json b = json::parse(slurp(kWork / "ou2" / "breakdown.json"));
  const json e = json::parse(slurp(fs::path(out) / "estimate.json")).at("rows");
  REQUIRE(e.size() == 2);
  const double I = b.at("I_z").get<double>(), C = b.at("C_z").get<double>();
  const double expect = std::sqrt(0.1 / (2.0 * std::numbers::pi)) * C * std::exp(-I / 0.1);
  CHECK(e[1].at("probability").get<double>() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sampling and comparison outputs") {
  const auto cfg = write("mc.json", R"({"model": "additive_ou", "nt": 100, "epsilon": 0.5, "z": 0.8,
                                        "n_samples": 5000, "z_values": [0.8], "epsilons": [0.5], "M": 5})");
  const auto out = out_dir("mc");
  REQUIRE(run("sample --config " + cfg.string() + " --out " + out + " --seed 2 --workers 1").code == 0);
  const std::string header = "epsilon,z,p_hat,wilson95_lo,wilson95_hi,wilson99_lo,wilson99_hi,sorm_estimate,n_samples,n_diverged";
  const std::string s = slurp(fs::path(out) / "sample.csv");
  CHECK(s.substr(0, s.find('\n')) == header);
  REQUIRE(run("compare --config " + cfg.string() + " --out " + out + " --seed 2 --workers 1").code == 0);
  const std::string c = slurp(fs::path(out) / "compare.csv");
  CHECK(c.substr(0, c.find('\n')) == header);
  CHECK(count_lines(c) == 2);
  // same seed, same counts
  const json sj = json::parse(slurp(fs::path(out) / "sample.json"));
  const json cj = json::parse(slurp(fs::path(out) / "compare.json"));
  CHECK(sj.at("p_hat").get<double>() == cj[0].at("p_hat").get<double>());
}
