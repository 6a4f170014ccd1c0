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
#include <functional>
#include <ostream>
#include <vector>

#include "sorm/operators.hpp"

namespace sorm {

/// Eigenvalues of a symmetric noise-space operator, largest |mu| first.
struct SpectrumResult {
  std::vector<double> eigenvalues;
  /// |A v - mu v| / max(|mu|, eps^(2/3)) per returned pair.
  std::vector<double> residuals;
  /// Filled only when requested; unit vectors in the dt-weighted norm.
  std::vector<NoiseVector> eigenvectors;
  int requested = 0;
  long matvec_count = 0;
  int restarts = 0;
  bool converged = false;
  /// Largest |M - M^T| / max|M| seen by the dense path (0 for Lanczos).
  double asymmetry = 0.0;
};

struct LanczosOptions {
  double tol = 1e-8;
  /// Restart cycles before giving up with a partial (unconverged) result.
  int max_restarts = 500;
  std::uint64_t seed = 20260101;
  /// Krylov basis size; 0 selects max(2M + 20, 100) capped by the dimension.
  int basis = 0;
  bool want_vectors = false;
};

/// M leading eigenvalues (by magnitude) via thick-restart Lanczos with full
/// reorthogonalization in the dt-weighted inner product. Throws an Operator
/// error when the recurrence detects an asymmetric operator.
SpectrumResult leading_eigenvalues(const OperatorHandle& op, int M, const LanczosOptions& options = {});

inline constexpr std::size_t kDenseCap = 4096;

/// Full spectrum from the assembled matrix. Refuses dimensions above cap.
SpectrumResult dense_spectrum(const OperatorHandle& op, std::size_t cap = kDenseCap);

struct MatvecRow {
  int nt = 0;
  long matvec_count = 0;
  bool converged = false;
};

std::vector<MatvecRow> matvec_scaling_report(const std::function<OperatorHandle(const TimeGrid&)>& factory,
                                             const std::vector<TimeGrid>& grids, int M,
                                             const LanczosOptions& options = {});

/// CSV with header index,eigenvalue,residual.
void write_spectrum_csv(std::ostream& out, const SpectrumResult& spectrum);

}  // namespace sorm
