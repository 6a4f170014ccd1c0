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

// Helpers shared by the test executables.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "sorm/model.hpp"
#include "sorm/models.hpp"
#include "sorm/operators.hpp"

namespace sorm::test {

inline NoiseVector random_noise(const TimeGrid& grid, int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  NoiseVector v(grid, dim);
  for (double& x : v.values()) x = n(rng);
  return v;
}

inline double max_abs(const NoiseVector& v) {
  double m = 0.0;
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_diff(const NoiseVector& a, const NoiseVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a.values()[i] - b.values()[i]));
    den = std::max(den, std::max(std::abs(a.values()[i]), std::abs(b.values()[i])));
  }
  return den > 0.0 ? num / den : num;
}

/// Column j holds op(e_j) for the canonical basis vector e_j.
inline Eigen::MatrixXd assemble(const OperatorHandle& op) {
  const auto N = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd M(N, N);
  NoiseVector e(op.grid, op.state_dim);
  for (Eigen::Index j = 0; j < N; ++j) {
    e.values().assign(op.size(), 0.0);
    e.values()[j] = 1.0;
    const auto col = op(e);
    for (Eigen::Index i = 0; i < N; ++i) M(i, j) = col.values()[i];
  }
  return M;
}

inline Eigen::VectorXd eigenvalues_by_magnitude(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// dX = (-x - x^3) dt + sqrt(eps) dW, X_0 = 0, f(x) = x on [0, 1]: nonlinear drift, additive noise.
inline Model cubic_additive() {
  Model m;
  auto& s = m.system;
  s.name = "cubic_additive";
  s.dim = 1;
  s.x0 = {0.0};
  s.horizon = 1.0;
  s.additive = true;
  s.drift = [](std::span<const double> x, std::span<double> o) { o[0] = -x[0] - x[0] * x[0] * x[0]; };
  s.drift_jacobian = [](std::span<const double> x, std::span<double> o) { o[0] = -1.0 - 3.0 * x[0] * x[0]; };
  s.drift_hessian = [](std::span<const double> x, std::span<double> o) { o[0] = -6.0 * x[0]; };
  s.diffusion = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
  s.diffusion_jacobian = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  s.diffusion_hessian = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  m.observable.name = "identity";
  m.observable.value = [](std::span<const double> x) { return x[0]; };
  m.observable.gradient = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
  m.observable.hessian = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  return m;
}

/// Two-dimensional Ito system with state-dependent, non-diagonal sigma and a
/// nonlinear observable; exercises every term of the second variation.
inline Model coupled_2d() {
  Model m;
  auto& s = m.system;
  s.name = "coupled_2d";
  s.dim = 2;
  s.x0 = {0.3, -0.2};
  s.horizon = 1.0;
  s.drift = [](std::span<const double> x, std::span<double> o) {
    o[0] = -x[0] + 0.5 * x[1] * x[1];
    o[1] = -0.7 * x[1] + std::sin(x[0]);
  };
  s.drift_jacobian = [](std::span<const double> x, std::span<double> o) {
    o[0] = -1.0, o[1] = x[1];
    o[2] = std::cos(x[0]), o[3] = -0.7;
  };
  s.drift_hessian = [](std::span<const double> x, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[(0 * 2 + 1) * 2 + 1] = 1.0;
    o[(1 * 2 + 0) * 2 + 0] = -std::sin(x[0]);
  };
  // sigma = [[1 + 0.3 x0^2, 0.2 x1], [0.1 x0 x1, 0.8 + 0.2 x1]]
  s.diffusion = [](std::span<const double> x, std::span<double> o) {
    o[0] = 1.0 + 0.3 * x[0] * x[0], o[1] = 0.2 * x[1];
    o[2] = 0.1 * x[0] * x[1], o[3] = 0.8 + 0.2 * x[1];
  };
  s.diffusion_jacobian = [](std::span<const double> x, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[(0 * 2 + 0) * 2 + 0] = 0.6 * x[0];
    o[(0 * 2 + 1) * 2 + 1] = 0.2;
    o[(1 * 2 + 0) * 2 + 0] = 0.1 * x[1];
    o[(1 * 2 + 0) * 2 + 1] = 0.1 * x[0];
    o[(1 * 2 + 1) * 2 + 1] = 0.2;
  };
  s.diffusion_hessian = [](std::span<const double>, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[((0 * 2 + 0) * 2 + 0) * 2 + 0] = 0.6;
    o[((1 * 2 + 0) * 2 + 0) * 2 + 1] = 0.1;
    o[((1 * 2 + 0) * 2 + 1) * 2 + 0] = 0.1;
  };
  m.observable.name = "x0 + x0 x1";
  m.observable.value = [](std::span<const double> x) { return x[0] + x[0] * x[1]; };
  m.observable.gradient = [](std::span<const double> x, std::span<double> o) {
    o[0] = 1.0 + x[1];
    o[1] = x[0];
  };
  m.observable.hessian = [](std::span<const double>, std::span<double> o) {
    o[0] = 0.0, o[1] = 1.0, o[2] = 1.0, o[3] = 0.0;
  };
  return m;
}

inline Model coupled_2d_stratonovich() {
  Model m = coupled_2d();
  m.system.name = "coupled_2d_strato";
  m.system.convention = Convention::Stratonovich;
  return m;
}

/// dX = sqrt(eps) dW in R^2 from the origin, f(x, y) = x + c y^2. Noise along
/// x only is a stationary point for any z, with lambda = z / T and a
/// y-direction Hessian eigenvalue 2 c lambda T.
inline Model saddle_2d(double c) {
  Model m;
  auto& s = m.system;
  s.name = "saddle_2d";
  s.dim = 2;
  s.x0 = {0.0, 0.0};
  s.horizon = 1.0;
  s.additive = true;
  auto zero = [](std::span<const double>, std::span<double> o) { std::fill(o.begin(), o.end(), 0.0); };
  s.drift = zero;
  s.drift_jacobian = zero;
  s.drift_hessian = zero;
  s.diffusion = [](std::span<const double>, std::span<double> o) { o[0] = 1.0, o[1] = 0.0, o[2] = 0.0, o[3] = 1.0; };
  s.diffusion_jacobian = zero;
  s.diffusion_hessian = zero;
  m.observable.name = "x + c y^2";
  m.observable.value = [c](std::span<const double> x) { return x[0] + c * x[1] * x[1]; };
  m.observable.gradient = [c](std::span<const double> x, std::span<double> o) { o[0] = 1.0, o[1] = 2.0 * c * x[1]; };
  m.observable.hessian = [c](std::span<const double>, std::span<double> o) { o[0] = 0.0, o[1] = 0.0, o[2] = 0.0, o[3] = 2.0 * c; };
  return m;
}

}  // namespace sorm::test
