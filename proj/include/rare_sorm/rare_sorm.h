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

/* C interface to the rare-sorm core. All handles are opaque; every function
 * that can fail returns an rs_status and leaves a message retrievable with
 * rs_last_error() on the calling thread. */

#ifndef RARE_SORM_H
#define RARE_SORM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RS_API __declspec(dllexport)
#else
#define RS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
  RS_OK = 0,
  RS_ERR_INVALID_ARGUMENT = 1,
  RS_ERR_DIMENSION = 2,
  RS_ERR_MODEL = 3,
  RS_ERR_DIVERGENCE = 4,
  RS_ERR_NOT_CONVERGED = 5,
  RS_ERR_NONDEGENERACY = 6,
  RS_ERR_DEGENERATE_REFERENCE = 7,
  RS_ERR_OPERATOR = 8,
  RS_ERR_SAMPLING = 9,
  RS_ERR_IO = 10,
  RS_ERR_CONFIG = 11,
  RS_ERR_SINGULAR = 12,
  RS_ERR_INTERNAL = 99
} rs_status;

typedef struct rs_model rs_model;
typedef struct rs_instanton rs_instanton;
typedef struct rs_breakdown rs_breakdown;

RS_API const char* rs_version(void);
/* Message of the last failed call on this thread ("" if none). */
RS_API const char* rs_last_error(void);
/* Static description of a status code. */
RS_API const char* rs_status_string(rs_status status);

/* ---- models ---------------------------------------------------------- */

RS_API size_t rs_model_count(void);
/* Name of built-in model i, or NULL when out of range. */
RS_API const char* rs_model_name(size_t i);

/* Builds a built-in model; parameters not listed keep their defaults. */
RS_API rs_status rs_model_create(const char* name, const char* const* param_names, const double* param_values,
                                 size_t n_params, rs_model** out);
RS_API void rs_model_free(rs_model* model);

typedef struct rs_model_info {
  int dim;
  double horizon;
  int stratonovich;
  int additive;
  double initial_value; /* f(x0) */
} rs_model_info;

RS_API rs_status rs_model_get_info(const rs_model* model, rs_model_info* info);

/* ---- instantons ------------------------------------------------------ */

typedef struct rs_optimizer_config {
  const double* mu_schedule; /* NULL keeps the default schedule */
  size_t n_mu;
  int lbfgs_memory;
  int lbfgs_max_iter;
  double grad_tol;
  double constraint_tol;
  double initial_lambda;
  const double* initial_eta; /* optional warm start, nt * dim values */
  size_t initial_eta_len;
} rs_optimizer_config;

RS_API void rs_optimizer_config_default(rs_optimizer_config* config);

/* On RS_ERR_NOT_CONVERGED *out may still hold the best iterate (converged = 0);
 * release it with rs_instanton_free. config may be NULL. */
RS_API rs_status rs_instanton_solve(const rs_model* model, int nt, double z, const rs_optimizer_config* config,
                                    rs_instanton** out);
RS_API rs_status rs_instanton_solve_mgf(const rs_model* model, int nt, double lambda,
                                        const rs_optimizer_config* config, rs_instanton** out);
/* Rebuilds a solution from saved noise and multiplier (paths are recomputed). */
RS_API rs_status rs_instanton_from_noise(const rs_model* model, int nt, const double* eta, size_t len, double lambda,
                                         double target_z, int iterations, int converged, rs_instanton** out);
RS_API void rs_instanton_free(rs_instanton* sol);

typedef struct rs_instanton_summary {
  int nt;
  int dim;
  double target_z;
  double achieved_z;
  double lambda;
  double rate;
  int iterations;
  int converged;
  double optimality_residual;
} rs_instanton_summary;

RS_API rs_status rs_instanton_get_summary(const rs_instanton* sol, rs_instanton_summary* summary);

typedef enum rs_path { RS_PATH_ETA = 0, RS_PATH_PHI = 1, RS_PATH_THETA = 2 } rs_path;

/* Copies a path (step-major). eta has nt rows, phi and theta nt + 1 rows.
 * *needed receives the value count; buf may be NULL to query it. */
RS_API rs_status rs_instanton_get_path(const rs_instanton* sol, rs_path which, double* buf, size_t len,
                                       size_t* needed);

/* Continuation scan. out[i] is NULL where no iterate is available; ok[i] is 1
 * for converged points. Per-point failures do not fail the call. */
RS_API rs_status rs_rate_function_scan(const rs_model* model, int nt, const double* z, size_t n,
                                       const rs_optimizer_config* config, int warm_start, rs_instanton** out,
                                       int* ok);

/* ---- prefactor ------------------------------------------------------- */

typedef struct rs_prefactor_options {
  int M;
  double tol;
  int max_restarts;
  uint64_t seed;
  int dense;  /* assembled-matrix spectrum instead of Lanczos */
  int strict; /* nonzero: fail with RS_ERR_NONDEGENERACY instead of returning a flagged breakdown */
} rs_prefactor_options;

RS_API void rs_prefactor_options_default(rs_prefactor_options* options);

RS_API rs_status rs_prefactor_compute(const rs_instanton* sol, const rs_prefactor_options* options,
                                      rs_breakdown** out);
RS_API void rs_breakdown_free(rs_breakdown* breakdown);

typedef struct rs_breakdown_values {
  double z;
  double lambda;
  double rate;
  double det2_projected;
  double trace_reg_projected;
  double quad_atilde;
  double strato_correction;
  double C;
  double log_C;
  int M_used;
  int valid;
  double offending_eigenvalue;
  long matvec_count;
  int spectra_converged;
} rs_breakdown_values;

RS_API rs_status rs_breakdown_get(const rs_breakdown* breakdown, rs_breakdown_values* values);

typedef enum rs_spectrum_kind {
  RS_SPECTRUM_PROJECTED = 0,     /* pr A pr */
  RS_SPECTRUM_PROJECTED_REG = 1, /* pr (A - Atilde) pr */
  RS_SPECTRUM_RESIDUALS = 2      /* residuals of the pr A pr pairs */
} rs_spectrum_kind;

RS_API rs_status rs_breakdown_get_spectrum(const rs_breakdown* breakdown, rs_spectrum_kind which, double* buf,
                                           size_t len, size_t* needed);

typedef struct rs_mgf_values {
  double lambda;
  double R;
  double log_R;
  double det2;
  double trace_reg;
  double strato_correction;
  int M_used;
  int valid;
} rs_mgf_values;

RS_API rs_status rs_mgf_prefactor(const rs_instanton* sol, const rs_prefactor_options* options,
                                  rs_mgf_values* values);
/* Plain Fredholm truncation to m eigenvalues (tail: projected; MGF: unprojected). */
RS_API rs_status rs_naive_prefactor(const rs_instanton* sol, int m, const rs_prefactor_options* options, double* C);
RS_API rs_status rs_naive_mgf_prefactor(const rs_instanton* sol, int m, const rs_prefactor_options* options,
                                        double* R);
/* Additive-noise models only. */
RS_API rs_status rs_riccati_prefactor(const rs_instanton* sol, double* C);

RS_API rs_status rs_tail_probability(double epsilon, double rate, double C, double* probability,
                                     double* log_probability);

/* ---- Monte Carlo ----------------------------------------------------- */

typedef struct rs_mc_config {
  long n_samples;
  uint64_t seed;
  int workers; /* 0: hardware concurrency; RARE_SORM_DETERMINISTIC=1 forces 1 */
  int abort_on_divergence;
} rs_mc_config;

RS_API void rs_mc_config_default(rs_mc_config* config);

typedef struct rs_tail_sample {
  double epsilon;
  double z;
  double p_hat;
  double wilson95_lo;
  double wilson95_hi;
  double wilson99_lo;
  double wilson99_hi;
  long n_success;
  long n_samples;
  long n_diverged;
  long n_effective;
} rs_tail_sample;

RS_API rs_status rs_wilson_interval(long successes, long n, double zq, double* lo, double* hi);
RS_API rs_status rs_mc_estimate(const rs_model* model, int nt, double epsilon, double z, const rs_mc_config* config,
                                rs_tail_sample* out);

typedef struct rs_sorm_point {
  double z;
  double rate;
  double C;
  int valid;
} rs_sorm_point;

typedef struct rs_compare_row {
  rs_tail_sample mc;
  double sorm_estimate;
  double fit_estimate;
  int ok;
} rs_compare_row;

/* rows must hold n_eps * n_points entries, epsilon-major. */
RS_API rs_status rs_compare_sweep(const rs_model* model, int nt, const double* epsilons, size_t n_eps,
                                  const rs_sorm_point* points, size_t n_points, const rs_mc_config* config,
                                  rs_compare_row* rows);

#ifdef __cplusplus
}
#endif

#endif /* RARE_SORM_H */
