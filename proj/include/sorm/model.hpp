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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sorm {

enum class Convention { Ito, Stratonovich };

/// Writes a vector/matrix/tensor valued function of the state into `out`.
///
/// Tensor layouts are flat row-major with the derivative indices last:
///   drift_jacobian      out[i*n + l]              = d_l b_i
///   drift_hessian       out[(i*n + l)*n + m]      = d_l d_m b_i
///   diffusion           out[i*n + j]              = sigma_ij
///   diffusion_jacobian  out[(i*n + j)*n + l]      = d_l sigma_ij
///   diffusion_hessian   out[((i*n + j)*n + l)*n + m] = d_l d_m sigma_ij
using StateMap = std::function<void(std::span<const double> x, std::span<double> out)>;
using ScalarMap = std::function<double(std::span<const double> x)>;

/// Small-noise SDE  dX = b(X) dt + sqrt(eps) sigma(X) dW  on R^n with square sigma.
///
/// Derivative callbacks are supplied analytically and must be pure and
/// thread-safe; validate_derivatives() checks them against finite differences.
/// Smoothness and boundedness of b, sigma and f are assumed, not checked.
struct SdeSystem {
  std::string name;
  int dim = 0;
  StateMap drift;
  StateMap diffusion;
  StateMap drift_jacobian;
  StateMap drift_hessian;
  StateMap diffusion_jacobian;
  StateMap diffusion_hessian;
  std::vector<double> x0;
  double horizon = 1.0;
  Convention convention = Convention::Ito;
  /// sigma is state independent. Only used to gate the Riccati route.
  bool additive = false;
};

/// Final-time observable f(X_T).
struct Observable {
  std::string name;
  ScalarMap value;
  StateMap gradient;
  StateMap hessian;
};

/// Equidistant grid t_k = k*dt, k = 0..nt, dt = T/nt.
class TimeGrid {
 public:
  TimeGrid(int nt, double horizon);

  int steps() const noexcept { return nt_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  double time(int k) const noexcept { return k * dt_; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.nt_ == b.nt_ && a.horizon_ == b.horizon_;
  }

 private:
  int nt_;
  double horizon_;
  double dt_;
};

/// Discretized noise eta in R^{n*nt}, step-major: entry (k, i) at k*n + i.
class NoiseVector {
 public:
  NoiseVector(const TimeGrid& grid, int dim);
  NoiseVector(const TimeGrid& grid, int dim, std::vector<double> data);

  static NoiseVector constant(const TimeGrid& grid, int dim, double value);

  const TimeGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int k, int i) { return data_[static_cast<std::size_t>(k) * dim_ + i]; }
  double at(int k, int i) const { return data_[static_cast<std::size_t>(k) * dim_ + i]; }
  std::span<double> step(int k) { return {data_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> step(int k) const {
    return {data_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_space(const NoiseVector& other) const noexcept {
    return dim_ == other.dim_ && grid_ == other.grid_;
  }

  NoiseVector& operator+=(const NoiseVector& other);
  NoiseVector& operator-=(const NoiseVector& other);
  NoiseVector& operator*=(double s);
  /// this += a * x
  NoiseVector& axpy(double a, const NoiseVector& x);

 private:
  TimeGrid grid_;
  int dim_;
  std::vector<double> data_;
};

NoiseVector operator+(NoiseVector a, const NoiseVector& b);
NoiseVector operator-(NoiseVector a, const NoiseVector& b);
NoiseVector operator*(double s, NoiseVector a);

/// State trajectory phi_k, k = 0..nt, step-major like NoiseVector.
class StatePath {
 public:
  StatePath(const TimeGrid& grid, int dim);

  const TimeGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int k, int i) { return data_[static_cast<std::size_t>(k) * dim_ + i]; }
  double at(int k, int i) const { return data_[static_cast<std::size_t>(k) * dim_ + i]; }
  std::span<double> step(int k) { return {data_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> step(int k) const {
    return {data_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> final_state() const { return step(grid_.steps()); }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

 private:
  TimeGrid grid_;
  int dim_;
  std::vector<double> data_;
};

/// <u, v> = dt * sum_i u_i v_i. Throws DimensionError on mismatched spaces.
double inner_product(const NoiseVector& u, const NoiseVector& v);
double norm(const NoiseVector& u);

struct DerivativeCheck {
  std::string callback;
  double max_rel_error = 0.0;
  bool flagged = false;
};

struct DerivativeReport {
  std::vector<DerivativeCheck> checks;
  double flag_threshold = 1e-4;
  bool ok() const noexcept;
  double max_error() const noexcept;
};

/// Compares every derivative callback of `system` and `obs` against central
/// differences (step 1e-5*(1+|x|)) at `n_points` states sampled around x0.
DerivativeReport validate_derivatives(const SdeSystem& system, const Observable& obs, int n_points,
                                      std::uint64_t rng_seed);

}  // namespace sorm
