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
#include <string>
#include <vector>

namespace sorm {

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 2000;
  /// Stop when the gradient norm (in the weighted inner product) drops below
  /// this, or below grad_tol * |x| when relative_tol is set.
  double grad_tol = 1e-8;
  bool relative_tol = false;
  double c1 = 1e-4;
  double c2 = 0.9;
  /// Function evaluations allowed per line search.
  int max_linesearch = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Evaluates f(x) and writes its gradient (Riesz representer in the weighted
/// inner product) into g. A non-finite return marks x as infeasible; the line
/// search then shortens the step.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& g)>;

/// Limited-memory BFGS with two-loop recursion and a strong-Wolfe line search,
/// in the inner product <u, v> = weight * sum u_i v_i.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, double weight,
                           const LbfgsOptions& options = {});

}  // namespace sorm
