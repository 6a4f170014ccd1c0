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

#include <map>
#include <string>
#include <vector>

#include "sorm/model.hpp"

namespace sorm {

/// An SDE together with the observable whose tail is estimated.
struct Model {
  SdeSystem system;
  Observable observable;
};

using ModelParams = std::map<std::string, double>;

/// dX = -beta X dt + sqrt(2 eps) X dW, X_0 = 1, f(x) = (log x)^2 / 2.
Model geometric_bm(double beta = 1.0, double horizon = 1.0);

/// Stratonovich version of geometric_bm with f(x) = log x, for which the
/// continuum second variation is trace class.
Model strato_gbm(double beta = 1.0, double horizon = 1.0);

/// Stochastic Lotka-Volterra model with migration, started at the drift
/// fixed point, f(x, y) = x (prey concentration).
Model predator_prey(double alpha = 1.0, double beta = 5.0, double gamma = 1.0, double delta = 0.1,
                    double horizon = 10.0);

/// dX = -kappa X dt + sqrt(eps) dW, X_0 = 0, f(x) = x.
Model additive_ou(double kappa = 1.0, double horizon = 1.0);

/// Builds a registered model by name, overriding default parameters.
/// Every model accepts "T" for the horizon. Unknown names or parameters throw.
Model make_model(const std::string& name, const ModelParams& params = {});

std::vector<std::string> model_names();

}  // namespace sorm
