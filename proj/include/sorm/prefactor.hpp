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

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sorm/instanton.hpp"
#include "sorm/model.hpp"
#include "sorm/operators.hpp"
#include "sorm/spectrum.hpp"

namespace sorm {

/// log prod (1 - mu) e^mu. Throws NondegeneracyError if any mu >= 1.
double log_carleman_fredholm_det(const std::vector<double>& eigenvalues);
double carleman_fredholm_det(const std::vector<double>& eigenvalues);
/// log prod (1 - mu). Throws NondegeneracyError if any mu >= 1.
double log_fredholm_det(const std::vector<double>& eigenvalues);
double fredholm_det(const std::vector<double>& eigenvalues);

/// Sum of the M leading eigenvalues (by magnitude) of op.
double trace_by_eigensum(const OperatorHandle& op, int M, const LanczosOptions& options = {});

struct TraceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Hutchinson estimator with Gaussian probes of variance 1/dt per entry.
TraceEstimate hutchinson_trace(const OperatorHandle& op, int n_samples, std::mt19937_64& rng);

struct PrefactorOptions {
  LanczosOptions lanczos;
  /// Use the assembled-matrix spectrum (all eigenvalues) instead of Lanczos.
  bool dense = false;
  /// Throw NondegeneracyError on an invalid breakdown instead of returning it flagged.
  bool strict = true;
};

/// Terms of the tail prefactor
///   C = [2 I det2]^(-1/2) exp(trace_reg / 2 - quad_atilde / 2 + strato_correction).
struct PrefactorBreakdown {
  double z = 0.0;
  double lambda = 0.0;
  double rate = 0.0;
  double det2_projected = 0.0;
  double trace_reg_projected = 0.0;
  double quad_atilde = 0.0;
  double strato_correction = 0.0;
  double C = 0.0;
  double log_C = 0.0;
  int M_used = 0;
  bool valid = false;
  /// Largest projected eigenvalue when the breakdown is invalid.
  double offending_eigenvalue = 0.0;
  std::vector<double> eigenvalues_projected;      ///< pr A pr
  std::vector<double> residuals_projected;
  std::vector<double> eigenvalues_reg_projected;  ///< pr (A - Atilde) pr
  /// log det2 using only the first m eigenvalues, m = 1..M_used.
  std::vector<double> log_det2_partial;
  long matvec_count = 0;
  bool spectra_converged = false;
};

PrefactorBreakdown compute_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                     const InstantonSolution& sol, int M, const PrefactorOptions& options = {});

/// R = det2(Id - A)^(-1/2) exp(tr(A - Atilde) / 2 + strato_correction).
struct MgfPrefactor {
  double lambda = 0.0;
  double R = 0.0;
  double log_R = 0.0;
  double det2 = 0.0;
  double trace_reg = 0.0;
  double strato_correction = 0.0;
  int M_used = 0;
  bool valid = false;
  double offending_eigenvalue = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> eigenvalues_reg;
};

MgfPrefactor compute_mgf_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                   const InstantonSolution& sol, int M, const PrefactorOptions& options = {});

struct TailEstimate {
  double probability = 0.0;
  double log_probability = 0.0;
};

/// sqrt(eps / (2 pi)) C exp(-I / eps), evaluated in log space.
TailEstimate tail_probability(double epsilon, double rate, double C);
TailEstimate tail_probability(double epsilon, const PrefactorBreakdown& breakdown);

/// [2 I det(Id - pr A pr)]^(-1/2) from the m leading eigenvalues of the
/// discrete projected Hessian (or all of them when m covers the dimension or
/// options.dense is set). Correct only for additive noise.
double naive_discrete_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                const InstantonSolution& sol, int m, const PrefactorOptions& options = {});

/// det(Id - A)^(-1/2) from the m leading eigenvalues of the discrete Hessian.
double naive_discrete_mgf_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                    const InstantonSolution& sol, int m, const PrefactorOptions& options = {});

struct MgfTailPoint {
  double z = 0.0;
  double lambda = 0.0;
  /// Central difference of lambda over the neighbouring achieved z values.
  double rate_curvature = 0.0;
  double C = 0.0;
  /// False where the curvature is not positive; C is NaN there.
  bool convex = false;
};

/// C(z) = R sqrt(I''(z)) / lambda at the interior points of a scan ordered by z.
std::vector<MgfTailPoint> tail_prefactor_via_mgf(const std::vector<InstantonSolution>& scan,
                                                 const std::vector<double>& mgf_prefactors);

}  // namespace sorm
