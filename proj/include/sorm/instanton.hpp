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

#include <optional>
#include <string>
#include <vector>

#include "sorm/errors.hpp"
#include "sorm/model.hpp"

namespace sorm {

/// Most probable noise realization reaching a target observable value.
struct InstantonSolution {
  NoiseVector eta;
  StatePath phi;
  StatePath theta;  ///< adjoint of lambda F, see GradientResult::theta
  double lambda = 0.0;
  double rate = 0.0;  ///< I(z) = <eta, eta>/2
  double achieved_z = 0.0;
  double target_z = 0.0;
  int iterations = 0;  ///< total L-BFGS iterations over all outer steps
  bool converged = false;
  /// |eta - lambda dF/deta| / |eta| (zero for the trivial solution).
  double optimality_residual = 0.0;
};

/// Augmented Lagrangian / L-BFGS settings.
struct OptimizerConfig {
  std::vector<double> mu_schedule = {1.0, 10.0, 100.0, 1e3, 1e4, 1e5};
  int lbfgs_memory = 10;
  int lbfgs_max_iter = 2000;
  /// Bound on the relative optimality residual |eta - lambda dF| / |eta|.
  double grad_tol = 1e-6;
  /// Relative constraint violation |F - z| / max(|z|, 1e-12) accepted at termination.
  double constraint_tol = 1e-3;
  std::optional<NoiseVector> initial_eta;
  double initial_lambda = 0.0;

  void validate() const;
};

/// Thrown when a solve exhausts its budgets; carries the best iterate.
class InstantonError : public Error {
 public:
  InstantonError(const std::string& what, InstantonSolution best)
      : Error(ErrorCode::NotConverged, what), best_(std::move(best)) {}
  const InstantonSolution& best() const noexcept { return best_; }

 private:
  InstantonSolution best_;
};

/// Rebuilds the full solution bundle (phi, theta, rate, residual) from a noise
/// vector and multiplier, e.g. after loading eta from disk.
InstantonSolution make_solution(const SdeSystem& system, const Observable& obs, const NoiseVector& eta,
                                double lambda, double target_z);

/// min <eta, eta>/2 subject to F[eta] = z, by minimizing
///   L = <eta, eta>/2 - lambda (F - z) + mu/2 (F - z)^2
/// over the mu schedule with the update lambda <- lambda - mu (F - z).
InstantonSolution find_instanton(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double z,
                                 const OptimizerConfig& config = {});

/// argmin <eta, eta>/2 - lambda F[eta] (moment-generating-function mode).
InstantonSolution find_instanton_mgf(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                     double lambda, const OptimizerConfig& config = {});

struct ScanPoint {
  double z = 0.0;
  bool ok = false;
  std::string message;
  std::optional<InstantonSolution> solution;  ///< best iterate, also on failure when available
};

/// Sequential continuation in z, each solve warm-started from the previous
/// successful one. Failures are recorded and the scan continues.
std::vector<ScanPoint> rate_function_scan(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                          const std::vector<double>& z_values, const OptimizerConfig& config = {},
                                          bool warm_start = true);

}  // namespace sorm
