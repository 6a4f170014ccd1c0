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

#include "rare_sorm/rare_sorm.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "sorm/errors.hpp"
#include "sorm/instanton.hpp"
#include "sorm/models.hpp"
#include "sorm/montecarlo.hpp"
#include "sorm/prefactor.hpp"
#include "sorm/riccati.hpp"

struct rs_model {
  std::shared_ptr<const sorm::Model> model;
};

struct rs_instanton {
  std::shared_ptr<const sorm::Model> model;
  sorm::TimeGrid grid;
  sorm::InstantonSolution solution;
};

struct rs_breakdown {
  sorm::PrefactorBreakdown breakdown;
};

namespace {

thread_local std::string last_error;

rs_status fail(rs_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
rs_status guard(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const sorm::Error& e) {
    return fail(static_cast<rs_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RS_ERR_INTERNAL, "unknown error");
  }
}

#define RS_REQUIRE(cond, msg) \
  if (!(cond)) return fail(RS_ERR_INVALID_ARGUMENT, msg)

sorm::OptimizerConfig to_config(const rs_optimizer_config* c, const sorm::TimeGrid& grid, int dim) {
  sorm::OptimizerConfig cfg;
  if (!c) return cfg;
  if (c->mu_schedule && c->n_mu > 0) cfg.mu_schedule.assign(c->mu_schedule, c->mu_schedule + c->n_mu);
  cfg.lbfgs_memory = c->lbfgs_memory;
  cfg.lbfgs_max_iter = c->lbfgs_max_iter;
  cfg.grad_tol = c->grad_tol;
  cfg.constraint_tol = c->constraint_tol;
  cfg.initial_lambda = c->initial_lambda;
  if (c->initial_eta) {
    if (c->initial_eta_len != static_cast<std::size_t>(grid.steps()) * dim)
      throw sorm::DimensionError("initial eta has the wrong length");
    cfg.initial_eta = sorm::NoiseVector(grid, dim, std::vector<double>(c->initial_eta, c->initial_eta + c->initial_eta_len));
  }
  return cfg;
}

sorm::PrefactorOptions to_options(const rs_prefactor_options* o) {
  sorm::PrefactorOptions p;
  if (!o) return p;
  p.lanczos.tol = o->tol;
  p.lanczos.max_restarts = o->max_restarts;
  p.lanczos.seed = o->seed;
  p.dense = o->dense != 0;
  p.strict = o->strict != 0;
  return p;
}

int M_of(const rs_prefactor_options* o) { return o ? o->M : 200; }

sorm::McConfig to_mc(const rs_mc_config* c) {
  sorm::McConfig m;
  if (!c) return m;
  m.n_samples = c->n_samples;
  m.seed = c->seed;
  m.workers = c->workers;
  m.abort_on_divergence = c->abort_on_divergence != 0;
  return m;
}

void fill_sample(const sorm::TailSample& t, rs_tail_sample* out) {
  out->epsilon = t.epsilon;
  out->z = t.z;
  out->p_hat = t.p_hat;
  out->wilson95_lo = t.wilson95.lo;
  out->wilson95_hi = t.wilson95.hi;
  out->wilson99_lo = t.wilson99.lo;
  out->wilson99_hi = t.wilson99.hi;
  out->n_success = t.n_success;
  out->n_samples = t.n_samples;
  out->n_diverged = t.n_diverged;
  out->n_effective = t.n_effective;
}

rs_status copy_out(const std::vector<double>& src, double* buf, std::size_t len, std::size_t* needed) {
  if (needed) *needed = src.size();
  if (!buf) return RS_OK;
  if (len < src.size()) return fail(RS_ERR_INVALID_ARGUMENT, "buffer too small");
  std::copy(src.begin(), src.end(), buf);
  return RS_OK;
}

sorm::TimeGrid grid_for(const rs_model* m, int nt) { return sorm::TimeGrid(nt, m->model->system.horizon); }

std::vector<std::string> names_cache = sorm::model_names();

}  // namespace

extern "C" {

const char* rs_version(void) { return "1.0.0"; }

const char* rs_last_error(void) { return last_error.c_str(); }

const char* rs_status_string(rs_status status) {
  switch (status) {
    case RS_OK: return "ok";
    case RS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RS_ERR_DIMENSION: return "dimension mismatch";
    case RS_ERR_MODEL: return "model callback error";
    case RS_ERR_DIVERGENCE: return "divergent time sweep";
    case RS_ERR_NOT_CONVERGED: return "solver did not converge";
    case RS_ERR_NONDEGENERACY: return "nondegeneracy violated";
    case RS_ERR_DEGENERATE_REFERENCE: return "degenerate reference vector";
    case RS_ERR_OPERATOR: return "operator error";
    case RS_ERR_SAMPLING: return "sampling error";
    case RS_ERR_IO: return "i/o error";
    case RS_ERR_CONFIG: return "configuration error";
    case RS_ERR_SINGULAR: return "singular operator";
    case RS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

size_t rs_model_count(void) { return names_cache.size(); }

const char* rs_model_name(size_t i) { return i < names_cache.size() ? names_cache[i].c_str() : nullptr; }

rs_status rs_model_create(const char* name, const char* const* param_names, const double* param_values,
                          size_t n_params, rs_model** out) {
  RS_REQUIRE(name && out, "name and out must not be NULL");
  RS_REQUIRE(n_params == 0 || (param_names && param_values), "parameter arrays must not be NULL");
  *out = nullptr;
  return guard([&] {
    sorm::ModelParams p;
    for (size_t i = 0; i < n_params; ++i) {
      if (!param_names[i]) return fail(RS_ERR_INVALID_ARGUMENT, "parameter name must not be NULL");
      p[param_names[i]] = param_values[i];
    }
    *out = new rs_model{std::make_shared<const sorm::Model>(sorm::make_model(name, p))};
    return RS_OK;
  });
}

void rs_model_free(rs_model* model) { delete model; }

rs_status rs_model_get_info(const rs_model* model, rs_model_info* info) {
  RS_REQUIRE(model && info, "model and info must not be NULL");
  return guard([&] {
    const auto& s = model->model->system;
    info->dim = s.dim;
    info->horizon = s.horizon;
    info->stratonovich = s.convention == sorm::Convention::Stratonovich;
    info->additive = s.additive;
    info->initial_value = model->model->observable.value(s.x0);
    return RS_OK;
  });
}

void rs_optimizer_config_default(rs_optimizer_config* config) {
  if (!config) return;
  static const sorm::OptimizerConfig d;
  config->mu_schedule = nullptr;
  config->n_mu = 0;
  config->lbfgs_memory = d.lbfgs_memory;
  config->lbfgs_max_iter = d.lbfgs_max_iter;
  config->grad_tol = d.grad_tol;
  config->constraint_tol = d.constraint_tol;
  config->initial_lambda = d.initial_lambda;
  config->initial_eta = nullptr;
  config->initial_eta_len = 0;
}

rs_status rs_instanton_solve(const rs_model* model, int nt, double z, const rs_optimizer_config* config,
                             rs_instanton** out) {
  RS_REQUIRE(model && out, "model and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    const auto grid = grid_for(model, nt);
    const auto& m = *model->model;
    try {
      auto s = sorm::find_instanton(m.system, m.observable, grid, z, to_config(config, grid, m.system.dim));
      *out = new rs_instanton{model->model, grid, std::move(s)};
      return RS_OK;
    } catch (const sorm::InstantonError& e) {
      *out = new rs_instanton{model->model, grid, e.best()};
      return fail(RS_ERR_NOT_CONVERGED, e.what());
    }
  });
}

rs_status rs_instanton_solve_mgf(const rs_model* model, int nt, double lambda, const rs_optimizer_config* config,
                                 rs_instanton** out) {
  RS_REQUIRE(model && out, "model and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    const auto grid = grid_for(model, nt);
    const auto& m = *model->model;
    try {
      auto s = sorm::find_instanton_mgf(m.system, m.observable, grid, lambda, to_config(config, grid, m.system.dim));
      *out = new rs_instanton{model->model, grid, std::move(s)};
      return RS_OK;
    } catch (const sorm::InstantonError& e) {
      *out = new rs_instanton{model->model, grid, e.best()};
      return fail(RS_ERR_NOT_CONVERGED, e.what());
    }
  });
}

rs_status rs_instanton_from_noise(const rs_model* model, int nt, const double* eta, size_t len, double lambda,
                                  double target_z, int iterations, int converged, rs_instanton** out) {
  RS_REQUIRE(model && eta && out, "model, eta and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    const auto grid = grid_for(model, nt);
    const auto& m = *model->model;
    if (len != static_cast<size_t>(nt) * m.system.dim) throw sorm::DimensionError("eta has the wrong length");
    sorm::NoiseVector e(grid, m.system.dim, std::vector<double>(eta, eta + len));
    auto s = sorm::make_solution(m.system, m.observable, e, lambda, target_z);
    s.iterations = iterations;
    s.converged = converged != 0;
    *out = new rs_instanton{model->model, grid, std::move(s)};
    return RS_OK;
  });
}

void rs_instanton_free(rs_instanton* sol) { delete sol; }

rs_status rs_instanton_get_summary(const rs_instanton* sol, rs_instanton_summary* summary) {
  RS_REQUIRE(sol && summary, "sol and summary must not be NULL");
  const auto& s = sol->solution;
  summary->nt = sol->grid.steps();
  summary->dim = s.eta.dim();
  summary->target_z = s.target_z;
  summary->achieved_z = s.achieved_z;
  summary->lambda = s.lambda;
  summary->rate = s.rate;
  summary->iterations = s.iterations;
  summary->converged = s.converged;
  summary->optimality_residual = s.optimality_residual;
  return RS_OK;
}

rs_status rs_instanton_get_path(const rs_instanton* sol, rs_path which, double* buf, size_t len, size_t* needed) {
  RS_REQUIRE(sol, "sol must not be NULL");
  switch (which) {
    case RS_PATH_ETA: return copy_out(sol->solution.eta.values(), buf, len, needed);
    case RS_PATH_PHI: return copy_out(sol->solution.phi.values(), buf, len, needed);
    case RS_PATH_THETA: return copy_out(sol->solution.theta.values(), buf, len, needed);
  }
  return fail(RS_ERR_INVALID_ARGUMENT, "unknown path selector");
}

rs_status rs_rate_function_scan(const rs_model* model, int nt, const double* z, size_t n,
                                const rs_optimizer_config* config, int warm_start, rs_instanton** out, int* ok) {
  RS_REQUIRE(model && z && out && ok && n > 0, "model, z, out, ok must not be NULL and n > 0");
  std::fill(out, out + n, nullptr);
  std::fill(ok, ok + n, 0);
  return guard([&] {
    const auto grid = grid_for(model, nt);
    const auto& m = *model->model;
    auto pts = sorm::rate_function_scan(m.system, m.observable, grid, std::vector<double>(z, z + n),
                                        to_config(config, grid, m.system.dim), warm_start != 0);
    for (size_t i = 0; i < n; ++i) {
      ok[i] = pts[i].ok;
      if (pts[i].solution) out[i] = new rs_instanton{model->model, grid, *pts[i].solution};
    }
    return RS_OK;
  });
}

void rs_prefactor_options_default(rs_prefactor_options* options) {
  if (!options) return;
  static const sorm::LanczosOptions d;
  options->M = 200;
  options->tol = d.tol;
  options->max_restarts = d.max_restarts;
  options->seed = d.seed;
  options->dense = 0;
  options->strict = 1;
}

rs_status rs_prefactor_compute(const rs_instanton* sol, const rs_prefactor_options* options, rs_breakdown** out) {
  RS_REQUIRE(sol && out, "sol and out must not be NULL");
  *out = nullptr;
  return guard([&] {
    const auto& m = *sol->model;
    auto b = sorm::compute_prefactor(m.system, m.observable, sol->grid, sol->solution, M_of(options),
                                     to_options(options));
    *out = new rs_breakdown{std::move(b)};
    return RS_OK;
  });
}

void rs_breakdown_free(rs_breakdown* breakdown) { delete breakdown; }

rs_status rs_breakdown_get(const rs_breakdown* breakdown, rs_breakdown_values* v) {
  RS_REQUIRE(breakdown && v, "breakdown and values must not be NULL");
  const auto& b = breakdown->breakdown;
  v->z = b.z;
  v->lambda = b.lambda;
  v->rate = b.rate;
  v->det2_projected = b.det2_projected;
  v->trace_reg_projected = b.trace_reg_projected;
  v->quad_atilde = b.quad_atilde;
  v->strato_correction = b.strato_correction;
  v->C = b.C;
  v->log_C = b.log_C;
  v->M_used = b.M_used;
  v->valid = b.valid;
  v->offending_eigenvalue = b.offending_eigenvalue;
  v->matvec_count = b.matvec_count;
  v->spectra_converged = b.spectra_converged;
  return RS_OK;
}

rs_status rs_breakdown_get_spectrum(const rs_breakdown* breakdown, rs_spectrum_kind which, double* buf, size_t len,
                                    size_t* needed) {
  RS_REQUIRE(breakdown, "breakdown must not be NULL");
  const auto& b = breakdown->breakdown;
  switch (which) {
    case RS_SPECTRUM_PROJECTED: return copy_out(b.eigenvalues_projected, buf, len, needed);
    case RS_SPECTRUM_PROJECTED_REG: return copy_out(b.eigenvalues_reg_projected, buf, len, needed);
    case RS_SPECTRUM_RESIDUALS: return copy_out(b.residuals_projected, buf, len, needed);
  }
  return fail(RS_ERR_INVALID_ARGUMENT, "unknown spectrum selector");
}

rs_status rs_mgf_prefactor(const rs_instanton* sol, const rs_prefactor_options* options, rs_mgf_values* v) {
  RS_REQUIRE(sol && v, "sol and values must not be NULL");
  return guard([&] {
    const auto& m = *sol->model;
    auto r = sorm::compute_mgf_prefactor(m.system, m.observable, sol->grid, sol->solution, M_of(options),
                                         to_options(options));
    v->lambda = r.lambda;
    v->R = r.R;
    v->log_R = r.log_R;
    v->det2 = r.det2;
    v->trace_reg = r.trace_reg;
    v->strato_correction = r.strato_correction;
    v->M_used = r.M_used;
    v->valid = r.valid;
    return RS_OK;
  });
}

rs_status rs_naive_prefactor(const rs_instanton* sol, int m, const rs_prefactor_options* options, double* C) {
  RS_REQUIRE(sol && C, "sol and C must not be NULL");
  return guard([&] {
    const auto& md = *sol->model;
    *C = sorm::naive_discrete_prefactor(md.system, md.observable, sol->grid, sol->solution, m, to_options(options));
    return RS_OK;
  });
}

rs_status rs_naive_mgf_prefactor(const rs_instanton* sol, int m, const rs_prefactor_options* options, double* R) {
  RS_REQUIRE(sol && R, "sol and R must not be NULL");
  return guard([&] {
    const auto& md = *sol->model;
    *R = sorm::naive_discrete_mgf_prefactor(md.system, md.observable, sol->grid, sol->solution, m,
                                            to_options(options));
    return RS_OK;
  });
}

rs_status rs_riccati_prefactor(const rs_instanton* sol, double* C) {
  RS_REQUIRE(sol && C, "sol and C must not be NULL");
  return guard([&] {
    const auto& md = *sol->model;
    *C = sorm::riccati_prefactor(md.system, md.observable, sol->grid, sol->solution);
    return RS_OK;
  });
}

rs_status rs_tail_probability(double epsilon, double rate, double C, double* probability, double* log_probability) {
  return guard([&] {
    const auto t = sorm::tail_probability(epsilon, rate, C);
    if (probability) *probability = t.probability;
    if (log_probability) *log_probability = t.log_probability;
    return RS_OK;
  });
}

void rs_mc_config_default(rs_mc_config* config) {
  if (!config) return;
  static const sorm::McConfig d;
  config->n_samples = d.n_samples;
  config->seed = d.seed;
  config->workers = d.workers;
  config->abort_on_divergence = d.abort_on_divergence;
}

rs_status rs_wilson_interval(long successes, long n, double zq, double* lo, double* hi) {
  RS_REQUIRE(lo && hi, "lo and hi must not be NULL");
  return guard([&] {
    const auto w = sorm::wilson_interval(successes, n, zq);
    *lo = w.lo;
    *hi = w.hi;
    return RS_OK;
  });
}

rs_status rs_mc_estimate(const rs_model* model, int nt, double epsilon, double z, const rs_mc_config* config,
                         rs_tail_sample* out) {
  RS_REQUIRE(model && out, "model and out must not be NULL");
  return guard([&] {
    const auto& m = *model->model;
    fill_sample(sorm::estimate_tail(m.system, m.observable, grid_for(model, nt), epsilon, z, to_mc(config)), out);
    return RS_OK;
  });
}

rs_status rs_compare_sweep(const rs_model* model, int nt, const double* epsilons, size_t n_eps,
                           const rs_sorm_point* points, size_t n_points, const rs_mc_config* config,
                           rs_compare_row* rows) {
  RS_REQUIRE(model && epsilons && points && rows, "arguments must not be NULL");
  return guard([&] {
    const auto& m = *model->model;
    std::vector<sorm::SormPoint> pts;
    for (size_t i = 0; i < n_points; ++i) pts.push_back({points[i].z, points[i].rate, points[i].C, points[i].valid != 0});
    auto r = sorm::compare_sweep(m.system, m.observable, grid_for(model, nt), std::vector<double>(epsilons, epsilons + n_eps),
                                 pts, to_mc(config));
    for (size_t i = 0; i < r.size(); ++i) {
      fill_sample(r[i].mc, &rows[i].mc);
      rows[i].sorm_estimate = r[i].sorm_estimate;
      rows[i].fit_estimate = r[i].fit_estimate;
      rows[i].ok = r[i].ok;
    }
    return RS_OK;
  });
}

}  // extern "C"
