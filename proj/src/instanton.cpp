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

#include "sorm/instanton.hpp"

#include <cmath>
#include <limits>

#include "sorm/lbfgs.hpp"
#include "sorm/propagation.hpp"

namespace sorm {

namespace {

// A line-search stall still counts when the gradient already meets the tolerance.
bool inner_ok(const LbfgsResult& r, double grad_tol, double dt) {
  if (r.converged) return true;
  double xx = 0.0;
  for (double v : r.x) xx += v * v;
  return r.grad_norm <= grad_tol * std::sqrt(dt * xx);
}

LbfgsOptions lbfgs_options(const OptimizerConfig& cfg) {
  LbfgsOptions o;
  o.memory = cfg.lbfgs_memory;
  o.max_iter = cfg.lbfgs_max_iter;
  o.grad_tol = cfg.grad_tol;
  o.relative_tol = true;
  return o;
}

NoiseVector starting_point(const OptimizerConfig& cfg, const TimeGrid& grid, int dim) {
  if (!cfg.initial_eta) return NoiseVector(grid, dim);
  if (!(cfg.initial_eta->grid() == grid) || cfg.initial_eta->dim() != dim)
    throw DimensionError("initial eta does not match the requested grid");
  return *cfg.initial_eta;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (mu_schedule.empty()) throw Error(ErrorCode::InvalidArgument, "mu_schedule must not be empty");
  for (std::size_t i = 0; i < mu_schedule.size(); ++i) {
    if (!(mu_schedule[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "penalty parameters must be positive");
    if (i > 0 && !(mu_schedule[i] > mu_schedule[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "mu_schedule must be strictly increasing");
  }
  if (!(grad_tol > 0.0) || !(constraint_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  if (lbfgs_memory < 1 || lbfgs_max_iter < 1) throw Error(ErrorCode::InvalidArgument, "L-BFGS budgets must be positive");
}

InstantonSolution make_solution(const SdeSystem& system, const Observable& obs, const NoiseVector& eta,
                                double lambda, double target_z) {
  auto g = gradient(system, obs, eta, lambda);
  InstantonSolution s{eta, std::move(g.phi), std::move(g.theta), lambda, 0.5 * inner_product(eta, eta),
                      g.value, target_z, 0, false, 0.0};
  const double en = norm(eta);
  if (en > 0.0) {
    NoiseVector r = eta;
    r -= g.gradient;
    s.optimality_residual = norm(r) / en;
  }
  return s;
}

InstantonSolution find_instanton(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double z,
                                 const OptimizerConfig& config) {
  config.validate();
  if (!std::isfinite(z)) throw Error(ErrorCode::InvalidArgument, "target z must be finite");
  const int n = system.dim;
  NoiseVector eta = starting_point(config, grid, n);

  const double f0 = solve_forward(system, obs, NoiseVector(grid, n)).value;
  const double scale = std::max(std::abs(z), 1e-12);
  if (!config.initial_eta && std::abs(z - f0) <= 1e-14 * std::max(1.0, std::abs(z))) {
    auto s = make_solution(system, obs, eta, 0.0, z);
    s.converged = true;
    return s;
  }

  double lambda = config.initial_lambda;
  int iterations = 0;
  bool done = false;
  const auto opts = lbfgs_options(config);
  const double dt = grid.dt();

  for (double mu : config.mu_schedule) {
    const double lam = lambda;
    Objective objective = [&](const std::vector<double>& x, std::vector<double>& g) {
      try {
        auto gr = gradient(system, obs, NoiseVector(grid, n, x), 1.0);
        const double c = gr.value - z;
        double xx = 0.0;
        for (double v : x) xx += v * v;
        const double coef = mu * c - lam;
        const auto& gf = gr.gradient.values();
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] + coef * gf[i];
        return 0.5 * dt * xx - lam * c + 0.5 * mu * c * c;
      } catch (const DivergenceError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    auto res = lbfgs_minimize(objective, eta.values(), dt, opts);
    iterations += res.iterations;
    const bool ok = inner_ok(res, config.grad_tol, dt);
    eta = NoiseVector(grid, n, std::move(res.x));
    const double achieved = solve_forward(system, obs, eta).value;
    lambda = lam - mu * (achieved - z);
    if (ok && std::abs(achieved - z) <= config.constraint_tol * scale) {
      done = true;
      break;
    }
  }

  auto s = make_solution(system, obs, eta, lambda, z);
  s.iterations = iterations;
  s.converged = done;
  if (!done)
    throw InstantonError("augmented Lagrangian did not reach the constraint/gradient tolerances (|F - z| = " +
                             std::to_string(std::abs(s.achieved_z - z)) + ")",
                         std::move(s));
  return s;
}

InstantonSolution find_instanton_mgf(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                     double lambda, const OptimizerConfig& config) {
  config.validate();
  if (!std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be finite");
  const int n = system.dim;
  NoiseVector eta = starting_point(config, grid, n);
  const double dt = grid.dt();

  Objective objective = [&](const std::vector<double>& x, std::vector<double>& g) {
    try {
      auto gr = gradient(system, obs, NoiseVector(grid, n, x), 1.0);
      double xx = 0.0;
      for (double v : x) xx += v * v;
      const auto& gf = gr.gradient.values();
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] - lambda * gf[i];
      return 0.5 * dt * xx - lambda * gr.value;
    } catch (const DivergenceError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto res = lbfgs_minimize(objective, eta.values(), dt, lbfgs_options(config));
  const bool ok = inner_ok(res, config.grad_tol, dt);
  auto s = make_solution(system, obs, NoiseVector(grid, n, std::move(res.x)), lambda, 0.0);
  s.target_z = s.achieved_z;
  s.iterations = res.iterations;
  s.converged = ok;
  if (!s.converged) throw InstantonError("MGF minimization did not converge: " + res.message, std::move(s));
  return s;
}

std::vector<ScanPoint> rate_function_scan(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                          const std::vector<double>& z_values, const OptimizerConfig& config,
                                          bool warm_start) {
  if (z_values.empty()) throw Error(ErrorCode::InvalidArgument, "rate_function_scan needs at least one z");
  std::vector<ScanPoint> out;
  OptimizerConfig cfg = config;
  for (double z : z_values) {
    ScanPoint p;
    p.z = z;
    try {
      p.solution = find_instanton(system, obs, grid, z, cfg);
      p.ok = true;
      if (warm_start) {
        cfg.initial_eta = p.solution->eta;
        cfg.initial_lambda = p.solution->lambda;
      }
    } catch (const InstantonError& e) {
      p.message = e.what();
      p.solution = e.best();
    } catch (const Error& e) {
      p.message = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sorm
