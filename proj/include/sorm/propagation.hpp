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

#include <random>

#include "sorm/model.hpp"

namespace sorm {

struct ForwardResult {
  StatePath phi;
  double value;  ///< F[eta] = f(phi_nt)
};

/// Explicit Euler solve of phi' = b(phi) + sigma(phi) eta from x0:
///   phi_{k+1} = phi_k + dt (b(phi_k) + sigma(phi_k) eta_k).
/// Stratonovich systems use the base drift; their correction only enters the prefactor.
ForwardResult solve_forward(const SdeSystem& system, const Observable& obs, const NoiseVector& eta);

struct GradientResult {
  NoiseVector gradient;  ///< d(lambda F)/d eta in the dt-weighted inner product
  StatePath phi;
  /// Discrete adjoint. theta.step(k + 1) is the momentum paired with noise step k,
  /// theta.step(nt) = lambda grad f(phi_nt).
  StatePath theta;
  double value;  ///< F[eta]
};

/// Exact gradient of the discrete map eta -> lambda F[eta] (transpose of the Euler
/// tangent, divided by dt):  g_k = sigma(phi_k)^T theta_{k+1},
///   theta_k = (Id + dt L_k)^T theta_{k+1},  L_k = grad b(phi_k) + grad sigma(phi_k) eta_k.
GradientResult gradient(const SdeSystem& system, const Observable& obs, const NoiseVector& eta, double lambda);

struct SampleResult {
  StatePath path;
  double value;
};

/// Euler-Maruyama sample X_{k+1} = X_k + dt b_eff(X_k) + sqrt(eps dt) sigma(X_k) xi_k.
/// For Stratonovich systems b_eff = b + (eps/2) sigma_jk d_j sigma_ik.
SampleResult sample_path(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                         std::mt19937_64& rng);

/// Same scheme as sample_path without storing the trajectory. Returns NaN when
/// the state becomes non-finite instead of throwing.
double sample_final_value(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                          std::mt19937_64& rng);

}  // namespace sorm
