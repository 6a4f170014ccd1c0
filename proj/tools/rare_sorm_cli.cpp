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

// rare-sorm command-line front end. Talks to the library only through the C API.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rare_sorm/rare_sorm.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kValidity = 3, kSampling = 4 };

struct Failure : std::runtime_error {
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

int exit_for(rs_status s) {
  switch (s) {
    case RS_OK: return kOk;
    case RS_ERR_INVALID_ARGUMENT:
    case RS_ERR_CONFIG:
    case RS_ERR_IO: return kConfig;
    case RS_ERR_NONDEGENERACY:
    case RS_ERR_SINGULAR: return kValidity;
    case RS_ERR_SAMPLING: return kSampling;
    default: return kSolver;
  }
}

void check(rs_status s, const std::string& what) {
  if (s != RS_OK) throw Failure(exit_for(s), what + ": " + rs_last_error());
}

// Owning wrappers for the C handles.
struct ModelDel { void operator()(rs_model* p) const { rs_model_free(p); } };
struct SolDel { void operator()(rs_instanton* p) const { rs_instanton_free(p); } };
struct BdDel { void operator()(rs_breakdown* p) const { rs_breakdown_free(p); } };
using ModelPtr = std::unique_ptr<rs_model, ModelDel>;
using SolPtr = std::unique_ptr<rs_instanton, SolDel>;
using BdPtr = std::unique_ptr<rs_breakdown, BdDel>;

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> nt;
  std::optional<int> M;
  bool emit_spectrum = false;
  bool dense = false;
  bool abort_on_divergence = false;
};

// ---- config -------------------------------------------------------------

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure(kConfig, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line, col = 1;
      else ++col;
    }
    throw Failure(kConfig, path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

template <class T>
T field(const json& j, const std::string& name) {
  if (!j.contains(name)) throw Failure(kConfig, "missing required field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Failure(kConfig, "field '" + name + "': " + e.what());
  }
}

template <class T>
T field_or(const json& j, const std::string& name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

json require_config(const Flags& f) {
  if (f.config.empty()) throw Failure(kConfig, "--config is required");
  json j = load_json(f.config);
  if (!j.is_object()) throw Failure(kConfig, "config must be a JSON object");
  return j;
}

ModelPtr make_model(const json& cfg) {
  const auto name = field<std::string>(cfg, "model");
  std::vector<std::string> keys;
  std::vector<double> vals;
  if (cfg.contains("params")) {
    const auto& p = cfg.at("params");
    if (!p.is_object()) throw Failure(kConfig, "field 'params' must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number()) throw Failure(kConfig, "field 'params." + it.key() + "' must be a number");
      keys.push_back(it.key());
      vals.push_back(it.value().get<double>());
    }
  }
  std::vector<const char*> ptrs;
  for (const auto& k : keys) ptrs.push_back(k.c_str());
  rs_model* m = nullptr;
  const auto s = rs_model_create(name.c_str(), ptrs.data(), vals.data(), keys.size(), &m);
  if (s != RS_OK) throw Failure(kConfig, std::string("model: ") + rs_last_error());
  return ModelPtr(m);
}

int grid_steps(const json& cfg, const Flags& f) {
  const int nt = f.nt ? *f.nt : field_or<int>(cfg, "nt", 1000);
  if (nt < 2) throw Failure(kConfig, "field 'nt' must be at least 2");
  return nt;
}

struct OptimizerSettings {
  rs_optimizer_config c{};
  std::vector<double> mu;
};

OptimizerSettings optimizer(const json& cfg) {
  OptimizerSettings o;
  rs_optimizer_config_default(&o.c);
  if (!cfg.contains("optimizer")) return o;
  const auto& j = cfg.at("optimizer");
  if (j.contains("mu_schedule")) {
    o.mu = field<std::vector<double>>(j, "mu_schedule");
    o.c.mu_schedule = o.mu.data();
    o.c.n_mu = o.mu.size();
  }
  o.c.lbfgs_memory = field_or(j, "lbfgs_memory", o.c.lbfgs_memory);
  o.c.lbfgs_max_iter = field_or(j, "lbfgs_max_iter", o.c.lbfgs_max_iter);
  o.c.grad_tol = field_or(j, "grad_tol", o.c.grad_tol);
  o.c.constraint_tol = field_or(j, "constraint_tol", o.c.constraint_tol);
  o.c.initial_lambda = field_or(j, "initial_lambda", o.c.initial_lambda);
  return o;
}

rs_prefactor_options prefactor_options(const json& cfg, const Flags& f) {
  rs_prefactor_options o;
  rs_prefactor_options_default(&o);
  o.M = f.M ? *f.M : field_or(cfg, "M", o.M);
  o.tol = field_or(cfg, "lanczos_tol", o.tol);
  o.max_restarts = field_or(cfg, "lanczos_max_restarts", o.max_restarts);
  o.dense = f.dense || field_or(cfg, "dense", false);
  return o;
}

rs_mc_config mc_config(const json& cfg, const Flags& f) {
  rs_mc_config c;
  rs_mc_config_default(&c);
  c.n_samples = field_or<long>(cfg, "n_samples", c.n_samples);
  c.seed = f.seed ? *f.seed : field_or<std::uint64_t>(cfg, "seed", c.seed);
  c.workers = f.workers ? *f.workers : field_or(cfg, "workers", 0);
  c.abort_on_divergence = f.abort_on_divergence || field_or(cfg, "abort_on_divergence", false);
  return c;
}

// ---- output -------------------------------------------------------------

// Shortest text that parses back to the same double; NaN becomes an empty field.
std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

fs::path out_file(const Flags& f, const std::string& name) {
  fs::create_directories(f.out);
  return fs::path(f.out) / name;
}

std::ofstream open_out(const Flags& f, const std::string& name) {
  std::ofstream o(out_file(f, name));
  if (!o) throw Failure(kConfig, "cannot write '" + (fs::path(f.out) / name).string() + "'");
  return o;
}

void write_json(const Flags& f, const std::string& name, const json& j) {
  auto o = open_out(f, name);
  o << j.dump(2) << '\n';
}

std::vector<double> path_of(const rs_instanton* sol, rs_path which) {
  std::size_t n = 0;
  check(rs_instanton_get_path(sol, which, nullptr, 0, &n), "path size");
  std::vector<double> v(n);
  check(rs_instanton_get_path(sol, which, v.data(), v.size(), &n), "path copy");
  return v;
}

void write_path_csv(const Flags& f, const std::string& name, const std::vector<double>& v, int dim, double dt,
                    const char* prefix) {
  auto o = open_out(f, name);
  o << "k,t";
  for (int i = 0; i < dim; ++i) o << ',' << prefix << i;
  o << '\n';
  const std::size_t rows = v.size() / dim;
  for (std::size_t k = 0; k < rows; ++k) {
    o << k << ',' << num(dt * k);
    for (int i = 0; i < dim; ++i) o << ',' << num(v[k * dim + i]);
    o << '\n';
  }
}

rs_instanton_summary summary_of(const rs_instanton* sol) {
  rs_instanton_summary s;
  check(rs_instanton_get_summary(sol, &s), "summary");
  return s;
}

// ---- instanton ------------------------------------------------------------

SolPtr solve(const rs_model* model, const json& cfg, const Flags& f, std::string& mode) {
  mode = field_or<std::string>(cfg, "mode", "tail");
  const int nt = grid_steps(cfg, f);
  auto opt = optimizer(cfg);
  rs_instanton* sol = nullptr;
  rs_status s;
  if (mode == "tail") {
    s = rs_instanton_solve(model, nt, field<double>(cfg, "z"), &opt.c, &sol);
  } else if (mode == "mgf") {
    s = rs_instanton_solve_mgf(model, nt, field<double>(cfg, "lambda"), &opt.c, &sol);
  } else {
    throw Failure(kConfig, "field 'mode' must be \"tail\" or \"mgf\"");
  }
  SolPtr owned(sol);
  check(s, "instanton solve");
  return owned;
}

json instanton_json(const json& cfg, const rs_model* model, const rs_instanton* sol, const std::string& mode) {
  rs_model_info info;
  check(rs_model_get_info(model, &info), "model info");
  const auto s = summary_of(sol);
  json j;
  j["model"] = cfg.at("model");
  j["params"] = cfg.value("params", json::object());
  j["mode"] = mode;
  j["nt"] = s.nt;
  j["horizon"] = info.horizon;
  j["z"] = s.target_z;
  j["achieved_z"] = s.achieved_z;
  j["lambda_z"] = s.lambda;
  j["rate"] = s.rate;
  j["iterations"] = s.iterations;
  j["converged"] = static_cast<bool>(s.converged);
  j["optimality_residual"] = s.optimality_residual;
  j["eta"] = path_of(sol, RS_PATH_ETA);
  return j;
}

int cmd_instanton(const Flags& f) {
  const json cfg = require_config(f);
  auto model = make_model(cfg);
  std::string mode;
  auto sol = solve(model.get(), cfg, f, mode);
  const auto s = summary_of(sol.get());
  rs_model_info info;
  check(rs_model_get_info(model.get(), &info), "model info");
  const double dt = info.horizon / s.nt;
  write_json(f, "instanton.json", instanton_json(cfg, model.get(), sol.get(), mode));
  write_path_csv(f, "eta.csv", path_of(sol.get(), RS_PATH_ETA), s.dim, dt, "eta");
  write_path_csv(f, "phi.csv", path_of(sol.get(), RS_PATH_PHI), s.dim, dt, "phi");
  write_path_csv(f, "theta.csv", path_of(sol.get(), RS_PATH_THETA), s.dim, dt, "theta");
  std::printf("z=%.10g lambda_z=%.10g rate=%.10g iterations=%d converged=%d\n", s.target_z, s.lambda, s.rate,
              s.iterations, s.converged);
  return kOk;
}

// Either loads a saved instanton ("instanton": path) or solves in-process.
struct Loaded {
  json cfg;
  ModelPtr model;
  SolPtr sol;
  std::string mode;
};

Loaded obtain_instanton(const json& cfg, const Flags& f) {
  Loaded l;
  if (cfg.contains("instanton")) {
    fs::path p = field<std::string>(cfg, "instanton");
    if (p.is_relative() && !f.config.empty()) p = fs::path(f.config).parent_path() / p;
    const json saved = load_json(p.string());
    l.cfg = cfg;
    l.cfg["model"] = field<std::string>(saved, "model");
    l.cfg["params"] = saved.value("params", json::object());
    l.mode = field_or<std::string>(saved, "mode", "tail");
    l.model = make_model(l.cfg);
    const auto eta = field<std::vector<double>>(saved, "eta");
    rs_instanton* sol = nullptr;
    check(rs_instanton_from_noise(l.model.get(), field<int>(saved, "nt"), eta.data(), eta.size(),
                                  field<double>(saved, "lambda_z"), field<double>(saved, "z"),
                                  field<int>(saved, "iterations"), field<bool>(saved, "converged"), &sol),
          "load instanton");
    l.sol.reset(sol);
  } else {
    l.cfg = cfg;
    l.model = make_model(cfg);
    l.sol = solve(l.model.get(), cfg, f, l.mode);
  }
  return l;
}

// ---- prefactor -------------------------------------------------------------

std::vector<double> spectrum_of(const rs_breakdown* b, rs_spectrum_kind which) {
  std::size_t n = 0;
  check(rs_breakdown_get_spectrum(b, which, nullptr, 0, &n), "spectrum size");
  std::vector<double> v(n);
  check(rs_breakdown_get_spectrum(b, which, v.data(), v.size(), &n), "spectrum copy");
  return v;
}

json breakdown_json(const rs_breakdown_values& v) {
  return json{{"z", v.z},
              {"lambda_z", v.lambda},
              {"I_z", v.rate},
              {"det2_projected", v.det2_projected},
              {"trace_reg_projected", v.trace_reg_projected},
              {"quad_atilde", v.quad_atilde},
              {"strato_correction", v.strato_correction},
              {"C_z", v.C},
              {"log_C_z", v.log_C},
              {"M_used", v.M_used},
              {"valid", static_cast<bool>(v.valid)},
              {"matvec_count", v.matvec_count},
              {"spectra_converged", static_cast<bool>(v.spectra_converged)}};
}

int cmd_prefactor(const Flags& f) {
  const json cfg = require_config(f);
  auto l = obtain_instanton(cfg, f);
  auto opts = prefactor_options(cfg, f);

  if (l.mode == "mgf") {
    rs_mgf_values v;
    check(rs_mgf_prefactor(l.sol.get(), &opts, &v), "MGF prefactor");
    write_json(f, "mgf_prefactor.json", json{{"lambda", v.lambda}, {"R", v.R}, {"log_R", v.log_R}, {"det2", v.det2},
                                              {"trace_reg", v.trace_reg}, {"strato_correction", v.strato_correction},
                                              {"M_used", v.M_used}});
    std::printf("lambda=%.10g R=%.10g det2=%.10g trace_reg=%.10g\n", v.lambda, v.R, v.det2, v.trace_reg);
    return kOk;
  }

  opts.strict = 0;
  rs_breakdown* raw = nullptr;
  check(rs_prefactor_compute(l.sol.get(), &opts, &raw), "prefactor");
  BdPtr bd(raw);
  rs_breakdown_values v;
  check(rs_breakdown_get(bd.get(), &v), "breakdown");

  write_json(f, "breakdown.json", breakdown_json(v));
  {
    auto o = open_out(f, "breakdown.csv");
    o << "z,lambda_z,I_z,det2_projected,trace_reg_projected,quad_atilde,C_z\n";
    o << num(v.z) << ',' << num(v.lambda) << ',' << num(v.rate) << ',' << num(v.det2_projected) << ','
      << num(v.trace_reg_projected) << ',' << num(v.quad_atilde) << ',' << num(v.C) << '\n';
  }
  if (f.emit_spectrum) {
    const auto mu = spectrum_of(bd.get(), RS_SPECTRUM_PROJECTED);
    const auto res = spectrum_of(bd.get(), RS_SPECTRUM_RESIDUALS);
    auto o = open_out(f, "spectrum.csv");
    o << "index,eigenvalue,residual\n";
    for (std::size_t i = 0; i < mu.size(); ++i) o << i << ',' << num(mu[i]) << ',' << num(i < res.size() ? res[i] : 0.0) << '\n';
    const auto reg = spectrum_of(bd.get(), RS_SPECTRUM_PROJECTED_REG);
    auto r = open_out(f, "spectrum_reg.csv");
    r << "index,eigenvalue\n";
    for (std::size_t i = 0; i < reg.size(); ++i) r << i << ',' << num(reg[i]) << '\n';
  }
  if (!v.valid)
    throw Failure(kValidity, "nondegeneracy violated: projected eigenvalue " + std::to_string(v.offending_eigenvalue) +
                                 " >= 1");
  std::printf("lambda_z=%.10g I_z=%.10g det2_projected=%.10g trace_reg_projected=%.10g quad_atilde=%.10g C_z=%.10g\n",
              v.lambda, v.rate, v.det2_projected, v.trace_reg_projected, v.quad_atilde, v.C);
  return kOk;
}

// ---- estimate --------------------------------------------------------------

int cmd_estimate(const Flags& f) {
  const json cfg = require_config(f);
  double rate = 0.0, C = 0.0;
  if (cfg.contains("breakdown")) {
    fs::path p = field<std::string>(cfg, "breakdown");
    if (p.is_relative()) p = fs::path(f.config).parent_path() / p;
    const json b = load_json(p.string());
    if (!field_or(b, "valid", true)) throw Failure(kValidity, "saved breakdown is flagged invalid");
    rate = field<double>(b, "I_z");
    C = field<double>(b, "C_z");
  } else {
    auto l = obtain_instanton(cfg, f);
    auto opts = prefactor_options(cfg, f);
    rs_breakdown* raw = nullptr;
    check(rs_prefactor_compute(l.sol.get(), &opts, &raw), "prefactor");
    BdPtr bd(raw);
    rs_breakdown_values v;
    check(rs_breakdown_get(bd.get(), &v), "breakdown");
    rate = v.rate;
    C = v.C;
  }
  const auto eps = field<std::vector<double>>(cfg, "epsilons");
  if (eps.empty()) throw Failure(kConfig, "field 'epsilons' must not be empty");
  auto o = open_out(f, "estimate.csv");
  o << "epsilon,probability,log_probability\n";
  json rows = json::array();
  for (double e : eps) {
    double p = 0.0, lp = 0.0;
    check(rs_tail_probability(e, rate, C, &p, &lp), "tail probability");
    o << num(e) << ',' << num(p) << ',' << num(lp) << '\n';
    rows.push_back({{"epsilon", e}, {"probability", p}, {"log_probability", lp}});
    std::printf("epsilon=%.6g P=%.10g log P=%.10g\n", e, p, lp);
  }
  write_json(f, "estimate.json", json{{"I_z", rate}, {"C_z", C}, {"rows", rows}});
  return kOk;
}

// ---- sampling ----------------------------------------------------------------

const char* kMcHeader = "epsilon,z,p_hat,wilson95_lo,wilson95_hi,wilson99_lo,wilson99_hi,sorm_estimate,n_samples,n_diverged\n";

void write_mc_row(std::ostream& o, const rs_tail_sample& t, double sorm) {
  o << num(t.epsilon) << ',' << num(t.z) << ',' << num(t.p_hat) << ',' << num(t.wilson95_lo) << ','
    << num(t.wilson95_hi) << ',' << num(t.wilson99_lo) << ',' << num(t.wilson99_hi) << ',' << num(sorm) << ','
    << t.n_samples << ',' << t.n_diverged << '\n';
}

json mc_json(const rs_tail_sample& t) {
  return json{{"epsilon", t.epsilon},         {"z", t.z},
              {"p_hat", t.p_hat},             {"wilson95", {t.wilson95_lo, t.wilson95_hi}},
              {"wilson99", {t.wilson99_lo, t.wilson99_hi}},
              {"n_success", t.n_success},     {"n_samples", t.n_samples},
              {"n_diverged", t.n_diverged},   {"n_effective", t.n_effective}};
}

int cmd_sample(const Flags& f) {
  const json cfg = require_config(f);
  auto model = make_model(cfg);
  const int nt = grid_steps(cfg, f);
  const auto mc = mc_config(cfg, f);
  const double eps = field<double>(cfg, "epsilon");
  const double z = field<double>(cfg, "z");
  rs_tail_sample t;
  check(rs_mc_estimate(model.get(), nt, eps, z, &mc, &t), "Monte Carlo");
  auto o = open_out(f, "sample.csv");
  o << kMcHeader;
  write_mc_row(o, t, std::numeric_limits<double>::quiet_NaN());
  write_json(f, "sample.json", mc_json(t));
  std::printf("p_hat=%.6g wilson95=[%.6g, %.6g] wilson99=[%.6g, %.6g] n=%ld diverged=%ld\n", t.p_hat, t.wilson95_lo,
              t.wilson95_hi, t.wilson99_lo, t.wilson99_hi, t.n_samples, t.n_diverged);
  return kOk;
}

int cmd_compare(const Flags& f) {
  const json cfg = require_config(f);
  auto model = make_model(cfg);
  const int nt = grid_steps(cfg, f);
  const auto zs = field<std::vector<double>>(cfg, "z_values");
  const auto eps = field<std::vector<double>>(cfg, "epsilons");
  if (zs.empty() || eps.empty()) throw Failure(kConfig, "fields 'z_values' and 'epsilons' must not be empty");
  auto opt = optimizer(cfg);
  auto popts = prefactor_options(cfg, f);
  popts.strict = 0;
  const auto mc = mc_config(cfg, f);

  std::vector<rs_instanton*> sols(zs.size(), nullptr);
  std::vector<int> ok(zs.size(), 0);
  check(rs_rate_function_scan(model.get(), nt, zs.data(), zs.size(), &opt.c, 1, sols.data(), ok.data()), "scan");
  std::vector<SolPtr> owned;
  for (auto* s : sols) owned.emplace_back(s);

  std::vector<rs_sorm_point> pts(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    pts[i] = {zs[i], 0.0, 0.0, 0};
    if (!ok[i]) {
      std::fprintf(stderr, "z=%g: instanton did not converge, skipping asymptotics\n", zs[i]);
      continue;
    }
    rs_breakdown* raw = nullptr;
    if (rs_prefactor_compute(owned[i].get(), &popts, &raw) != RS_OK) {
      std::fprintf(stderr, "z=%g: prefactor failed: %s\n", zs[i], rs_last_error());
      continue;
    }
    BdPtr bd(raw);
    rs_breakdown_values v;
    check(rs_breakdown_get(bd.get(), &v), "breakdown");
    pts[i] = {zs[i], v.rate, v.C, v.valid};
  }

  std::vector<rs_compare_row> rows(zs.size() * eps.size());
  check(rs_compare_sweep(model.get(), nt, eps.data(), eps.size(), pts.data(), pts.size(), &mc, rows.data()),
        "compare sweep");
  auto o = open_out(f, "compare.csv");
  o << kMcHeader;
  json arr = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& p = pts[i % pts.size()];
    write_mc_row(o, r.mc, r.sorm_estimate);
    json j = mc_json(r.mc);
    j["I_z"] = p.rate;
    j["C_z"] = p.C;
    j["sorm_estimate"] = r.sorm_estimate;
    j["fit_estimate"] = r.fit_estimate;
    j["ok"] = static_cast<bool>(r.ok);
    arr.push_back(j);
  }
  write_json(f, "compare.json", arr);
  std::printf("wrote %zu rows\n", rows.size());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharp large-deviation (SORM) tail estimates for SDEs with multiplicative noise"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file");
  app.add_option("--out", f.out, "Output directory")->capture_default_str();
  app.add_option("--seed", f.seed, "Seed for sampling");
  app.add_option("--workers", f.workers, "Monte Carlo worker threads (0: all cores)");
  app.add_option("--nt", f.nt, "Override the number of time steps");
  app.add_option("--M", f.M, "Override the number of leading eigenvalues");
  app.add_flag("--emit-spectrum", f.emit_spectrum, "Write spectrum.csv next to the breakdown");
  app.add_flag("--dense", f.dense, "Use the dense eigendecomposition instead of Lanczos");
  app.add_flag("--abort-on-divergence", f.abort_on_divergence, "Fail on the first diverged sample path");

  int (*handler)(const Flags&) = nullptr;
  app.add_subcommand("instanton", "Solve for the instanton and write eta/phi/theta paths")
      ->callback([&] { handler = cmd_instanton; });
  app.add_subcommand("prefactor", "Compute the prefactor breakdown at one threshold")
      ->callback([&] { handler = cmd_prefactor; });
  app.add_subcommand("estimate", "Asymptotic tail probabilities for a list of noise strengths")
      ->callback([&] { handler = cmd_estimate; });
  app.add_subcommand("sample", "Monte Carlo tail probability with Wilson intervals")
      ->callback([&] { handler = cmd_sample; });
  app.add_subcommand("compare", "Monte Carlo versus asymptotic estimates over z and epsilon")
      ->callback([&] { handler = cmd_compare; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  try {
    return handler(f);
  } catch (const Failure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
}
