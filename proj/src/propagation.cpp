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

#include "sorm/propagation.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

void check_noise(const SdeSystem& system, const NoiseVector& eta) {
  if (eta.dim() != system.dim) throw DimensionError("noise dimension does not match the system");
  if (system.x0.size() != static_cast<std::size_t>(system.dim)) throw DimensionError("x0 has wrong dimension");
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Euler-Maruyama core shared by sample_path and sample_final_value.
template <class OnStep>
bool euler_maruyama(const SdeSystem& sys, const TimeGrid& grid, double epsilon, std::mt19937_64& rng,
                    std::vector<double>& x, OnStep&& on_step) {
  const int n = sys.dim;
  const double dt = grid.dt();
  const double amp = std::sqrt(epsilon * dt);
  const bool strato = sys.convention == Convention::Stratonovich && epsilon > 0.0;
  std::vector<double> b(n), sig(n * n), dsig(strato ? n * n * n : 0), xi(n), next(n);
  std::normal_distribution<double> normal;
  x.assign(sys.x0.begin(), sys.x0.end());
  for (int k = 0; k < grid.steps(); ++k) {
    sys.drift(x, b);
    if (strato) {
      sys.diffusion(x, sig);
      sys.diffusion_jacobian(x, dsig);
      for (int i = 0; i < n; ++i) {
        double c = 0.0;
        for (int j = 0; j < n; ++j)
          for (int kk = 0; kk < n; ++kk) c += sig[j * n + kk] * dsig[(i * n + kk) * n + j];
        b[i] += 0.5 * epsilon * c;
      }
    }
    if (epsilon > 0.0) {
      if (!strato) sys.diffusion(x, sig);
      for (int i = 0; i < n; ++i) xi[i] = normal(rng);
    }
    for (int i = 0; i < n; ++i) {
      double v = x[i] + dt * b[i];
      if (epsilon > 0.0) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += sig[i * n + j] * xi[j];
        v += amp * s;
      }
      next[i] = v;
    }
    if (!all_finite(next)) return on_step(k, next, false);
    x.swap(next);
    on_step(k + 1, x, true);
  }
  return true;
}

}  // namespace

ForwardResult solve_forward(const SdeSystem& system, const Observable& obs, const NoiseVector& eta) {
  check_noise(system, eta);
  const int n = system.dim;
  const auto& grid = eta.grid();
  const double dt = grid.dt();
  StatePath phi(grid, n);
  std::copy(system.x0.begin(), system.x0.end(), phi.step(0).begin());
  std::vector<double> b(n), sig(n * n);
  for (int k = 0; k < grid.steps(); ++k) {
    auto x = phi.step(k);
    auto e = eta.step(k);
    system.drift(x, b);
    system.diffusion(x, sig);
    auto next = phi.step(k + 1);
    for (int i = 0; i < n; ++i) {
      double s = b[i];
      for (int j = 0; j < n; ++j) s += sig[i * n + j] * e[j];
      next[i] = x[i] + dt * s;
    }
    if (!all_finite(next)) throw DivergenceError("forward solve produced a non-finite state", k + 1);
  }
  const double value = obs.value(phi.final_state());
  if (!std::isfinite(value)) throw DivergenceError("observable is not finite at the final state", grid.steps());
  return {std::move(phi), value};
}

GradientResult gradient(const SdeSystem& system, const Observable& obs, const NoiseVector& eta, double lambda) {
  if (!std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be finite");
  auto fwd = solve_forward(system, obs, eta);
  const int n = system.dim;
  const auto& grid = eta.grid();
  const int nt = grid.steps();
  const double dt = grid.dt();

  StatePath theta(grid, n);
  NoiseVector g(grid, n);
  std::vector<double> jac(n * n), sig(n * n), dsig(n * n * n);

  obs.gradient(fwd.phi.final_state(), theta.step(nt));
  for (double& v : theta.step(nt)) v *= lambda;

  for (int k = nt - 1; k >= 0; --k) {
    auto x = fwd.phi.step(k);
    auto e = eta.step(k);
    auto p = theta.step(k + 1);
    system.drift_jacobian(x, jac);
    system.diffusion(x, sig);
    system.diffusion_jacobian(x, dsig);
    auto gk = g.step(k);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += sig[i * n + j] * p[i];
      gk[j] = s;
    }
    auto pk = theta.step(k);
    for (int l = 0; l < n; ++l) {
      // (L_k^T p)_l = sum_i (d_l b_i + sum_j d_l sigma_ij eta_j) p_i
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        double lil = jac[i * n + l];
        for (int j = 0; j < n; ++j) lil += dsig[(i * n + j) * n + l] * e[j];
        s += lil * p[i];
      }
      pk[l] = p[l] + dt * s;
    }
    if (!all_finite(pk)) throw DivergenceError("adjoint sweep produced a non-finite state", k);
  }
  return {std::move(g), std::move(fwd.phi), std::move(theta), fwd.value};
}

SampleResult sample_path(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                         std::mt19937_64& rng) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be non-negative");
  StatePath path(grid, system.dim);
  std::vector<double> x;
  int failed_step = -1;
  std::copy(system.x0.begin(), system.x0.end(), path.step(0).begin());
  euler_maruyama(system, grid, epsilon, rng, x, [&](int k, const std::vector<double>& state, bool ok) {
    if (!ok) {
      failed_step = k + 1;
      return false;
    }
    std::copy(state.begin(), state.end(), path.step(k).begin());
    return true;
  });
  if (failed_step >= 0) throw DivergenceError("sample path produced a non-finite state", failed_step);
  const double value = obs.value(path.final_state());
  if (!std::isfinite(value)) throw DivergenceError("observable is not finite at the sampled final state", grid.steps());
  return {std::move(path), value};
}

double sample_final_value(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                          std::mt19937_64& rng) {
  std::vector<double> x;
  const bool ok = euler_maruyama(system, grid, epsilon, rng, x, [](int, const std::vector<double>&, bool s) { return s; });
  if (!ok) return std::numeric_limits<double>::quiet_NaN();
  return obs.value(x);
}

}  // namespace sorm
