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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sorm/model.hpp"
#include "sorm/propagation.hpp"

namespace sorm {

/// Linearization of the discrete noise-to-observable map around (eta, lambda).
///
/// Holds the instanton-like point (eta, phi, theta, lambda) and the per-step
/// matrices every second-variation sweep needs, evaluated once:
///   S_k = sigma(phi_k)
///   L_k = grad b(phi_k) + grad sigma(phi_k) eta_k
///   P_k[l][j] = sum_i theta_{k+1,i} d_l sigma_ij(phi_k)
///   H_k[l][m] = sum_i theta_{k+1,i} (d_l d_m b_i + sum_j d_l d_m sigma_ij eta_kj)
///   H_f       = lambda hess f(phi_nt)
class SolutionContext {
 public:
  SolutionContext(const SdeSystem& system, const Observable& obs, const NoiseVector& eta, double lambda);

  const NoiseVector& eta() const noexcept { return eta_; }
  const StatePath& phi() const noexcept { return grad_.phi; }
  const StatePath& theta() const noexcept { return grad_.theta; }
  /// d(lambda F)/d eta at eta.
  const NoiseVector& gradient() const noexcept { return grad_.gradient; }
  double lambda() const noexcept { return lambda_; }
  double observable_value() const noexcept { return grad_.value; }
  const TimeGrid& grid() const noexcept { return eta_.grid(); }
  int dim() const noexcept { return n_; }
  Convention convention() const noexcept { return convention_; }

  const double* S(int k) const { return &S_[mat(k)]; }
  const double* L(int k) const { return &L_[mat(k)]; }
  const double* P(int k) const { return &P_[mat(k)]; }
  const double* H(int k) const { return &H_[mat(k)]; }
  const double* final_hessian() const { return Hf_.data(); }

  /// dt * sum_k sum_{i,j,m} sigma_jm(phi_k) d_j sigma_im(phi_k) theta_{k+1,i}
  /// (left-endpoint quadrature of the Ito-Stratonovich trace integral).
  double ito_trace_integral() const noexcept { return ito_trace_; }

 private:
  std::size_t mat(int k) const { return static_cast<std::size_t>(k) * n_ * n_; }

  int n_;
  Convention convention_;
  NoiseVector eta_;
  double lambda_;
  GradientResult grad_;
  std::vector<double> S_, L_, P_, H_, Hf_;
  double ito_trace_ = 0.0;
};

/// All internal states of one second-variation evaluation in direction deta.
struct VariationState {
  StatePath gamma1;     ///< tangent, gamma1_0 = 0
  StatePath zeta;       ///< full second-order adjoint
  StatePath zeta_sing;  ///< singular part, zeta_sing_nt = 0
  StatePath zeta_reg;   ///< regular part, zeta_reg_nt = H_f gamma1_nt
  std::vector<double> L;  ///< per-step L_k, row-major n x n
};

VariationState variation_state(const SolutionContext& ctx, const NoiseVector& deta);

/// A_lambda deta: exact second directional derivative of the discrete map
/// lambda F (tangent-over-adjoint), in the dt-weighted representation.
NoiseVector hessian_apply(const SolutionContext& ctx, const NoiseVector& deta);

/// Singular part: sigma^T zeta_sing + <theta, (grad sigma .) gamma1>.
NoiseVector atilde_apply(const SolutionContext& ctx, const NoiseVector& deta);

/// (A - Atilde) deta = sigma^T zeta_reg, computed by its own sweep.
NoiseVector regularized_apply(const SolutionContext& ctx, const NoiseVector& deta);

/// v - <ref, v>/|ref|^2 ref. Throws on a zero reference.
NoiseVector project_perp(const NoiseVector& eta_ref, const NoiseVector& v);

/// Matrix-free symmetric operator on noise space.
struct OperatorHandle {
  std::function<NoiseVector(const NoiseVector&)> apply;
  TimeGrid grid;
  int state_dim;
  std::string label;

  std::size_t size() const noexcept { return static_cast<std::size_t>(grid.steps()) * state_dim; }
  NoiseVector operator()(const NoiseVector& v) const { return apply(v); }
};

OperatorHandle hessian_operator(std::shared_ptr<const SolutionContext> ctx);
OperatorHandle atilde_operator(std::shared_ptr<const SolutionContext> ctx);
OperatorHandle regularized_operator(std::shared_ptr<const SolutionContext> ctx);

/// pr o op o pr with pr the orthogonal projection onto eta_ref^perp.
OperatorHandle compose_projected(OperatorHandle op, const NoiseVector& eta_ref);

}  // namespace sorm
