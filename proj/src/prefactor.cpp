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

#include "sorm/prefactor.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

constexpr double kValidityMargin = 1e-10;

void require_below_one(double mu) {
  if (!(mu < 1.0))
    throw NondegeneracyError("eigenvalue " + std::to_string(mu) + " >= 1 violates nondegeneracy", mu);
}

SpectrumResult spectrum_of(const OperatorHandle& op, int M, const PrefactorOptions& options) {
  if (options.dense || static_cast<std::size_t>(M) >= op.size()) {
    auto s = dense_spectrum(op);
    if (static_cast<std::size_t>(M) < s.eigenvalues.size()) {
      s.eigenvalues.resize(M);
      s.residuals.resize(M);
    }
    return s;
  }
  return leading_eigenvalues(op, M, options.lanczos);
}

void check_solution(const InstantonSolution& sol, const TimeGrid& grid, int dim) {
  if (!sol.converged) throw Error(ErrorCode::InvalidArgument, "prefactor needs a converged instanton solution");
  if (!(sol.eta.grid() == grid) || sol.eta.dim() != dim)
    throw DimensionError("instanton solution does not match the requested grid/system");
}

double max_of(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

double strato_term(const SolutionContext& ctx) {
  return ctx.convention() == Convention::Stratonovich ? 0.5 * ctx.ito_trace_integral() : 0.0;
}

}  // namespace

double log_carleman_fredholm_det(const std::vector<double>& eigenvalues) {
  double s = 0.0;
  for (double mu : eigenvalues) {
    require_below_one(mu);
    s += std::log1p(-mu) + mu;
  }
  return s;
}

double carleman_fredholm_det(const std::vector<double>& eigenvalues) {
  return std::exp(log_carleman_fredholm_det(eigenvalues));
}

double log_fredholm_det(const std::vector<double>& eigenvalues) {
  double s = 0.0;
  for (double mu : eigenvalues) {
    require_below_one(mu);
    s += std::log1p(-mu);
  }
  return s;
}

double fredholm_det(const std::vector<double>& eigenvalues) { return std::exp(log_fredholm_det(eigenvalues)); }

double trace_by_eigensum(const OperatorHandle& op, int M, const LanczosOptions& options) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "trace_by_eigensum needs M >= 1");
  double s = 0.0;
  for (double mu : leading_eigenvalues(op, M, options).eigenvalues) s += mu;
  return s;
}

TraceEstimate hutchinson_trace(const OperatorHandle& op, int n_samples, std::mt19937_64& rng) {
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "Hutchinson estimator needs at least two probes");
  const double dt = op.grid.dt();
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(dt));
  double mean = 0.0, m2 = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> xi(op.size());
    for (double& v : xi) v = normal(rng);
    NoiseVector probe(op.grid, op.state_dim, std::move(xi));
    const double x = inner_product(probe, op(probe));
    const double d = x - mean;
    mean += d / (s + 1);
    m2 += d * (x - mean);
  }
  return {mean, std::sqrt(m2 / (n_samples - 1) / n_samples)};
}

PrefactorBreakdown compute_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                     const InstantonSolution& sol, int M, const PrefactorOptions& options) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "M must be at least 1");
  check_solution(sol, grid, system.dim);
  if (!(sol.rate > 0.0)) throw Error(ErrorCode::DegenerateReference, "prefactor undefined at the trivial instanton");

  auto ctx = std::make_shared<const SolutionContext>(system, obs, sol.eta, sol.lambda);
  const auto pA = compose_projected(hessian_operator(ctx), sol.eta);
  const auto pR = compose_projected(regularized_operator(ctx), sol.eta);
  const auto sA = spectrum_of(pA, M, options);
  const auto sR = spectrum_of(pR, M, options);

  PrefactorBreakdown b;
  b.z = sol.target_z;
  b.lambda = sol.lambda;
  b.rate = sol.rate;
  b.M_used = static_cast<int>(sA.eigenvalues.size());
  b.eigenvalues_projected = sA.eigenvalues;
  b.residuals_projected = sA.residuals;
  b.eigenvalues_reg_projected = sR.eigenvalues;
  b.matvec_count = sA.matvec_count + sR.matvec_count;
  b.spectra_converged = sA.converged && sR.converged;

  for (double mu : sR.eigenvalues) b.trace_reg_projected += mu;
  NoiseVector e = sol.eta;
  e *= 1.0 / norm(sol.eta);
  b.quad_atilde = inner_product(e, atilde_apply(*ctx, e));
  b.strato_correction = strato_term(*ctx);

  const double top = max_of(sA.eigenvalues);
  b.valid = top < 1.0 - kValidityMargin;
  if (!b.valid) {
    b.offending_eigenvalue = top;
    b.det2_projected = std::numeric_limits<double>::quiet_NaN();
    b.C = b.log_C = std::numeric_limits<double>::quiet_NaN();
    if (options.strict)
      throw NondegeneracyError("projected Hessian has eigenvalue " + std::to_string(top) + " >= 1", top);
    return b;
  }

  double acc = 0.0;
  b.log_det2_partial.reserve(sA.eigenvalues.size());
  for (double mu : sA.eigenvalues) {
    acc += std::log1p(-mu) + mu;
    b.log_det2_partial.push_back(acc);
  }
  b.det2_projected = std::exp(acc);
  b.log_C = -0.5 * (std::log(2.0 * sol.rate) + acc) + 0.5 * b.trace_reg_projected - 0.5 * b.quad_atilde +
            b.strato_correction;
  b.C = std::exp(b.log_C);
  return b;
}

MgfPrefactor compute_mgf_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                   const InstantonSolution& sol, int M, const PrefactorOptions& options) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "M must be at least 1");
  check_solution(sol, grid, system.dim);

  MgfPrefactor r;
  r.lambda = sol.lambda;
  auto ctx = std::make_shared<const SolutionContext>(system, obs, sol.eta, sol.lambda);
  r.strato_correction = strato_term(*ctx);
  if (sol.lambda == 0.0) {
    // Both operators vanish identically.
    r.R = std::exp(r.strato_correction);
    r.log_R = r.strato_correction;
    r.det2 = 1.0;
    r.valid = true;
    return r;
  }
  const auto sA = spectrum_of(hessian_operator(ctx), M, options);
  const auto sR = spectrum_of(regularized_operator(ctx), M, options);
  r.M_used = static_cast<int>(sA.eigenvalues.size());
  r.eigenvalues = sA.eigenvalues;
  r.eigenvalues_reg = sR.eigenvalues;
  for (double mu : sR.eigenvalues) r.trace_reg += mu;

  const double top = max_of(sA.eigenvalues);
  r.valid = top < 1.0 - kValidityMargin;
  if (!r.valid) {
    r.offending_eigenvalue = top;
    r.R = r.log_R = r.det2 = std::numeric_limits<double>::quiet_NaN();
    if (options.strict) throw NondegeneracyError("Hessian has eigenvalue " + std::to_string(top) + " >= 1", top);
    return r;
  }
  const double ld = log_carleman_fredholm_det(sA.eigenvalues);
  r.det2 = std::exp(ld);
  r.log_R = -0.5 * ld + 0.5 * r.trace_reg + r.strato_correction;
  r.R = std::exp(r.log_R);
  return r;
}

TailEstimate tail_probability(double epsilon, double rate, double C) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "prefactor must be positive");
  TailEstimate t;
  t.log_probability = 0.5 * std::log(epsilon / (2.0 * std::numbers::pi)) + std::log(C) - rate / epsilon;
  t.probability = std::exp(t.log_probability);
  return t;
}

TailEstimate tail_probability(double epsilon, const PrefactorBreakdown& breakdown) {
  if (!breakdown.valid) throw NondegeneracyError("breakdown is flagged invalid", breakdown.offending_eigenvalue);
  return tail_probability(epsilon, breakdown.rate, breakdown.C);
}

double naive_discrete_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                const InstantonSolution& sol, int m, const PrefactorOptions& options) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
  check_solution(sol, grid, system.dim);
  if (!(sol.rate > 0.0)) throw Error(ErrorCode::DegenerateReference, "prefactor undefined at the trivial instanton");
  auto ctx = std::make_shared<const SolutionContext>(system, obs, sol.eta, sol.lambda);
  const auto s = spectrum_of(compose_projected(hessian_operator(ctx), sol.eta), m, options);
  return std::exp(-0.5 * (std::log(2.0 * sol.rate) + log_fredholm_det(s.eigenvalues)));
}

double naive_discrete_mgf_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                    const InstantonSolution& sol, int m, const PrefactorOptions& options) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
  check_solution(sol, grid, system.dim);
  if (sol.lambda == 0.0) return 1.0;
  auto ctx = std::make_shared<const SolutionContext>(system, obs, sol.eta, sol.lambda);
  const auto s = spectrum_of(hessian_operator(ctx), m, options);
  return std::exp(-0.5 * log_fredholm_det(s.eigenvalues));
}

std::vector<MgfTailPoint> tail_prefactor_via_mgf(const std::vector<InstantonSolution>& scan,
                                                 const std::vector<double>& mgf_prefactors) {
  if (scan.size() != mgf_prefactors.size())
    throw Error(ErrorCode::InvalidArgument, "scan and MGF prefactor lists differ in length");
  if (scan.size() < 3) throw Error(ErrorCode::InvalidArgument, "MGF-to-tail transform needs at least three points");
  std::vector<MgfTailPoint> out;
  for (std::size_t j = 1; j + 1 < scan.size(); ++j) {
    const auto& lo = scan[j - 1];
    const auto& hi = scan[j + 1];
    const double dz = hi.achieved_z - lo.achieved_z;
    if (!(dz > 0.0)) throw Error(ErrorCode::InvalidArgument, "scan must be strictly increasing in achieved z");
    MgfTailPoint p;
    p.z = scan[j].achieved_z;
    p.lambda = scan[j].lambda;
    p.rate_curvature = (hi.lambda - lo.lambda) / dz;
    p.convex = p.rate_curvature > 0.0 && p.lambda != 0.0;
    p.C = p.convex ? mgf_prefactors[j] * std::sqrt(p.rate_curvature) / std::abs(p.lambda)
                   : std::numeric_limits<double>::quiet_NaN();
    out.push_back(p);
  }
  return out;
}

}  // namespace sorm
