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

#include "sorm/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sorm/errors.hpp"

namespace sorm {

TimeGrid::TimeGrid(int nt, double horizon) : nt_(nt), horizon_(horizon), dt_(horizon / nt) {
  if (nt < 2) throw Error(ErrorCode::InvalidArgument, "time grid needs nt >= 2, got " + std::to_string(nt));
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorCode::InvalidArgument, "time horizon must be positive and finite");
}

NoiseVector::NoiseVector(const TimeGrid& grid, int dim)
    : grid_(grid), dim_(dim), data_(static_cast<std::size_t>(grid.steps()) * dim, 0.0) {}

NoiseVector::NoiseVector(const TimeGrid& grid, int dim, std::vector<double> data)
    : grid_(grid), dim_(dim), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(grid.steps()) * dim)
    throw DimensionError("noise vector has " + std::to_string(data_.size()) + " entries, expected " +
                         std::to_string(static_cast<std::size_t>(grid.steps()) * dim));
}

NoiseVector NoiseVector::constant(const TimeGrid& grid, int dim, double value) {
  NoiseVector v(grid, dim);
  std::fill(v.data_.begin(), v.data_.end(), value);
  return v;
}

namespace {
void require_same(const NoiseVector& a, const NoiseVector& b) {
  if (!a.same_space(b)) throw DimensionError("noise vectors live on different grids or dimensions");
}
}  // namespace

NoiseVector& NoiseVector::operator+=(const NoiseVector& other) { return axpy(1.0, other); }
NoiseVector& NoiseVector::operator-=(const NoiseVector& other) { return axpy(-1.0, other); }

NoiseVector& NoiseVector::operator*=(double s) {
  for (auto& x : data_) x *= s;
  return *this;
}

NoiseVector& NoiseVector::axpy(double a, const NoiseVector& x) {
  require_same(*this, x);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
  return *this;
}

NoiseVector operator+(NoiseVector a, const NoiseVector& b) { return a += b; }
NoiseVector operator-(NoiseVector a, const NoiseVector& b) { return a -= b; }
NoiseVector operator*(double s, NoiseVector a) { return a *= s; }

StatePath::StatePath(const TimeGrid& grid, int dim)
    : grid_(grid), dim_(dim), data_(static_cast<std::size_t>(grid.steps() + 1) * dim, 0.0) {}

double inner_product(const NoiseVector& u, const NoiseVector& v) {
  require_same(u, v);
  const auto& a = u.values();
  const auto& b = v.values();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return u.grid().dt() * s;
}

double norm(const NoiseVector& u) { return std::sqrt(inner_product(u, u)); }

bool DerivativeReport::ok() const noexcept {
  return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.flagged; });
}

double DerivativeReport::max_error() const noexcept {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.max_rel_error);
  return m;
}

namespace {

std::string format_state(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void evaluate(const StateMap& fn, const std::string& name, std::span<const double> x, std::span<double> out) {
  if (!fn) throw ModelError("callback '" + name + "' is not set");
  fn(x, out);
  for (double v : out)
    if (!std::isfinite(v)) throw ModelError("callback '" + name + "' returned a non-finite value at x = " + format_state(x));
}

// max over outputs of |child - fd(parent)| / max(1, |fd|), parent of size p, child of size p*n.
double fd_error(const StateMap& parent, const std::string& parent_name, const StateMap& child,
                const std::string& child_name, std::size_t p, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> analytic(p * n), plus(p), minus(p), xs(x.begin(), x.end());
  evaluate(child, child_name, x, analytic);
  double worst = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const double h = 1e-5 * (1.0 + std::abs(x[l]));
    xs[l] = x[l] + h;
    evaluate(parent, parent_name, xs, plus);
    xs[l] = x[l] - h;
    evaluate(parent, parent_name, xs, minus);
    xs[l] = x[l];
    for (std::size_t r = 0; r < p; ++r) {
      const double fd = (plus[r] - minus[r]) / (2.0 * h);
      const double err = std::abs(analytic[r * n + l] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace

DerivativeReport validate_derivatives(const SdeSystem& system, const Observable& obs, int n_points,
                                      std::uint64_t rng_seed) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "validate_derivatives needs n_points >= 1");
  const auto n = static_cast<std::size_t>(system.dim);
  if (system.x0.size() != n) throw DimensionError("initial state has wrong dimension");

  StateMap value_map = [&obs](std::span<const double> x, std::span<double> out) { out[0] = obs.value(x); };

  struct Pair {
    const StateMap* parent;
    std::string parent_name;
    const StateMap* child;
    std::string child_name;
    std::size_t parent_size;
  };
  const std::vector<Pair> pairs = {
      {&system.drift, "drift", &system.drift_jacobian, "drift_jacobian", n},
      {&system.drift_jacobian, "drift_jacobian", &system.drift_hessian, "drift_hessian", n * n},
      {&system.diffusion, "diffusion", &system.diffusion_jacobian, "diffusion_jacobian", n * n},
      {&system.diffusion_jacobian, "diffusion_jacobian", &system.diffusion_hessian, "diffusion_hessian", n * n * n},
      {&value_map, "observable", &obs.gradient, "observable_gradient", 1},
      {&obs.gradient, "observable_gradient", &obs.hessian, "observable_hessian", n},
  };

  DerivativeReport report;
  for (const auto& p : pairs) report.checks.push_back({p.child_name, 0.0, false});

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (int pt = 0; pt < n_points; ++pt) {
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = system.x0[i] != 0.0 ? 0.25 * std::abs(system.x0[i]) : 1.0;
      x[i] = system.x0[i] + scale * u(rng);
    }
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const auto& p = pairs[c];
      const double e = fd_error(*p.parent, p.parent_name, *p.child, p.child_name, p.parent_size, x);
      report.checks[c].max_rel_error = std::max(report.checks[c].max_rel_error, e);
    }
  }
  for (auto& c : report.checks) c.flagged = c.max_rel_error > report.flag_threshold;
  return report;
}

}  // namespace sorm
