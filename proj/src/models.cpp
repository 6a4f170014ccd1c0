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

#include "sorm/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

void zero(std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); }

// b(x) = -beta x, sigma(x) = sqrt(2) x shared by both geometric Brownian motions.
SdeSystem gbm_system(double beta, double horizon, Convention convention) {
  const double s2 = std::numbers::sqrt2;
  SdeSystem sys;
  sys.dim = 1;
  sys.x0 = {1.0};
  sys.horizon = horizon;
  sys.convention = convention;
  sys.drift = [beta](std::span<const double> x, std::span<double> out) { out[0] = -beta * x[0]; };
  sys.drift_jacobian = [beta](std::span<const double>, std::span<double> out) { out[0] = -beta; };
  sys.drift_hessian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  sys.diffusion = [s2](std::span<const double> x, std::span<double> out) { out[0] = s2 * x[0]; };
  sys.diffusion_jacobian = [s2](std::span<const double>, std::span<double> out) { out[0] = s2; };
  sys.diffusion_hessian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  return sys;
}

}  // namespace

Model geometric_bm(double beta, double horizon) {
  Model m;
  m.system = gbm_system(beta, horizon, Convention::Ito);
  m.system.name = "geometric_bm";
  m.observable.name = "half_log_squared";
  m.observable.value = [](std::span<const double> x) {
    const double l = std::log(x[0]);
    return 0.5 * l * l;
  };
  m.observable.gradient = [](std::span<const double> x, std::span<double> out) { out[0] = std::log(x[0]) / x[0]; };
  m.observable.hessian = [](std::span<const double> x, std::span<double> out) {
    out[0] = (1.0 - std::log(x[0])) / (x[0] * x[0]);
  };
  return m;
}

Model strato_gbm(double beta, double horizon) {
  Model m;
  m.system = gbm_system(beta, horizon, Convention::Stratonovich);
  m.system.name = "strato_gbm";
  m.observable.name = "log";
  m.observable.value = [](std::span<const double> x) { return std::log(x[0]); };
  m.observable.gradient = [](std::span<const double> x, std::span<double> out) { out[0] = 1.0 / x[0]; };
  m.observable.hessian = [](std::span<const double> x, std::span<double> out) { out[0] = -1.0 / (x[0] * x[0]); };
  return m;
}

Model predator_prey(double alpha, double beta, double gamma, double delta, double horizon) {
  if (!(alpha > 0 && beta > 0 && gamma > 0 && delta > 0))
    throw Error(ErrorCode::InvalidArgument, "predator_prey rates must be positive");

  // Drift fixed point: y = (alpha x + 2 delta)/gamma and a quadratic in x.
  const double qa = beta * alpha / gamma;
  const double qb = alpha - 2.0 * beta * delta / gamma;
  const double x0 = (qb + std::sqrt(qb * qb + 4.0 * qa * delta)) / (2.0 * qa);
  const double y0 = (alpha * x0 + 2.0 * delta) / gamma;

  Model m;
  auto& s = m.system;
  s.name = "predator_prey";
  s.dim = 2;
  s.x0 = {x0, y0};
  s.horizon = horizon;

  s.drift = [=](std::span<const double> v, std::span<double> out) {
    const double x = v[0], y = v[1];
    out[0] = -beta * x * y + alpha * x + delta;
    out[1] = beta * x * y - gamma * y + delta;
  };
  s.drift_jacobian = [=](std::span<const double> v, std::span<double> out) {
    const double x = v[0], y = v[1];
    out[0] = -beta * y + alpha;
    out[1] = -beta * x;
    out[2] = beta * y;
    out[3] = beta * x - gamma;
  };
  s.drift_hessian = [=](std::span<const double>, std::span<double> out) {
    // out[(i*2 + l)*2 + m]
    out[0] = 0.0, out[1] = -beta, out[2] = -beta, out[3] = 0.0;
    out[4] = 0.0, out[5] = beta, out[6] = beta, out[7] = 0.0;
  };

  // sigma = diag(sqrt(g1), sqrt(g2)) with
  //   g1 = beta x y + alpha x + delta,  g2 = beta x y + gamma y + delta.
  struct Rates {
    double g[2];
    double dg[2][2];
  };
  auto rates = [=](std::span<const double> v) {
    const double x = v[0], y = v[1];
    return Rates{{beta * x * y + alpha * x + delta, beta * x * y + gamma * y + delta},
                 {{beta * y + alpha, beta * x}, {beta * y, beta * x + gamma}}};
  };
  s.diffusion = [=](std::span<const double> v, std::span<double> out) {
    const Rates r = rates(v);
    out[0] = std::sqrt(r.g[0]);
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = std::sqrt(r.g[1]);
  };
  s.diffusion_jacobian = [=](std::span<const double> v, std::span<double> out) {
    const Rates r = rates(v);
    zero(out);
    for (int i = 0; i < 2; ++i) {
      const double root = std::sqrt(r.g[i]);
      for (int l = 0; l < 2; ++l) out[(i * 2 + i) * 2 + l] = r.dg[i][l] / (2.0 * root);
    }
  };
  s.diffusion_hessian = [=](std::span<const double> v, std::span<double> out) {
    const Rates r = rates(v);
    zero(out);
    const double d2g[2][2] = {{0.0, beta}, {beta, 0.0}};  // same for g1 and g2
    for (int i = 0; i < 2; ++i) {
      const double root = std::sqrt(r.g[i]);
      const double g32 = r.g[i] * root;
      for (int l = 0; l < 2; ++l)
        for (int mm = 0; mm < 2; ++mm)
          out[((i * 2 + i) * 2 + l) * 2 + mm] = d2g[l][mm] / (2.0 * root) - r.dg[i][l] * r.dg[i][mm] / (4.0 * g32);
    }
  };

  m.observable.name = "prey";
  m.observable.value = [](std::span<const double> v) { return v[0]; };
  m.observable.gradient = [](std::span<const double>, std::span<double> out) {
    out[0] = 1.0;
    out[1] = 0.0;
  };
  m.observable.hessian = [](std::span<const double>, std::span<double> out) { zero(out); };
  return m;
}

Model additive_ou(double kappa, double horizon) {
  Model m;
  auto& s = m.system;
  s.name = "additive_ou";
  s.dim = 1;
  s.x0 = {0.0};
  s.horizon = horizon;
  s.additive = true;
  s.drift = [kappa](std::span<const double> x, std::span<double> out) { out[0] = -kappa * x[0]; };
  s.drift_jacobian = [kappa](std::span<const double>, std::span<double> out) { out[0] = -kappa; };
  s.drift_hessian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  s.diffusion = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  s.diffusion_jacobian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  s.diffusion_hessian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  m.observable.name = "identity";
  m.observable.value = [](std::span<const double> x) { return x[0]; };
  m.observable.gradient = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  m.observable.hessian = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  return m;
}

namespace {

double take(ModelParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  const double v = it->second;
  p.erase(it);
  return v;
}

}  // namespace

std::vector<std::string> model_names() { return {"geometric_bm", "strato_gbm", "predator_prey", "additive_ou"}; }

Model make_model(const std::string& name, const ModelParams& params) {
  ModelParams p = params;
  Model m;
  if (name == "geometric_bm") {
    const double beta = take(p, "beta", 1.0);
    m = geometric_bm(beta, take(p, "T", 1.0));
  } else if (name == "strato_gbm") {
    const double beta = take(p, "beta", 1.0);
    m = strato_gbm(beta, take(p, "T", 1.0));
  } else if (name == "predator_prey") {
    const double alpha = take(p, "alpha", 1.0);
    const double beta = take(p, "beta", 5.0);
    const double gamma = take(p, "gamma", 1.0);
    const double delta = take(p, "delta", 0.1);
    m = predator_prey(alpha, beta, gamma, delta, take(p, "T", 10.0));
  } else if (name == "additive_ou") {
    const double kappa = take(p, "kappa", 1.0);
    m = additive_ou(kappa, take(p, "T", 1.0));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "'");
  }
  if (!p.empty()) throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + p.begin()->first + "' for model " + name);
  return m;
}

}  // namespace sorm
