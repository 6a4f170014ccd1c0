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

#include <vector>

#include "sorm/instanton.hpp"
#include "sorm/model.hpp"

namespace sorm {

/// Forward Riccati solution along an instanton (additive noise only).
struct RiccatiState {
  int dim = 0;
  /// Q at every grid node, row-major n x n; Q[0] = 0.
  std::vector<std::vector<double>> Q;
  /// U = Id - lambda hess f(phi(T)) Q(T), row-major.
  std::vector<double> U;
  /// int_0^T tr[<hess b, theta> Q] dt.
  double curvature_integral = 0.0;
  /// Largest |Q - Q^T| removed by symmetrization.
  double max_asymmetry = 0.0;
  /// Smallest eigenvalue of Q over all nodes.
  double min_eigenvalue = 0.0;
  double C = 0.0;
};

/// Integrates dQ/dt = sigma sigma^T + Q grad b^T + grad b Q + Q <hess b, theta> Q
/// with RK4 (phi and theta linearly interpolated to half steps) and assembles
///   C = |lambda|^-1 exp(curvature_integral / 2) [det U <grad f, Q(T) U^-1 grad f>]^(-1/2).
RiccatiState riccati_solve(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                           const InstantonSolution& sol);

double riccati_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                         const InstantonSolution& sol);

}  // namespace sorm
