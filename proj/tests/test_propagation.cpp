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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sorm/errors.hpp"
#include "sorm/models.hpp"
#include "sorm/propagation.hpp"
#include "support.hpp"

using namespace sorm;

namespace {

double directional_fd(const Model& m, const NoiseVector& eta, const NoiseVector& d, double lambda, double h) {
  auto plus = eta, minus = eta;
  plus.axpy(h, d);
  minus.axpy(-h, d);
  return lambda * (solve_forward(m.system, m.observable, plus).value - solve_forward(m.system, m.observable, minus).value) /
         (2.0 * h);
}

}  // namespace

TEST_CASE("predator-prey starts at its drift fixed point") {
  auto m = predator_prey();
  TimeGrid g(1000, 10.0);
  auto r = solve_forward(m.system, m.observable, NoiseVector(g, 2));
  const double x = std::sqrt(0.02);
  CHECK(r.value == doctest::Approx(x).epsilon(1e-12));
  for (int k = 0; k <= g.steps(); k += 100) {
    CHECK(r.phi.at(k, 0) == doctest::Approx(x).epsilon(1e-12));
    CHECK(r.phi.at(k, 1) == doctest::Approx(x + 0.2).epsilon(1e-12));
  }
}

TEST_CASE("geometric BM without noise decays like the Euler product") {
  auto m = geometric_bm();
  TimeGrid g(1000, 1.0);
  auto r = solve_forward(m.system, m.observable, NoiseVector(g, 1));
  CHECK(r.phi.final_state()[0] == doctest::Approx(std::pow(1.0 - 1e-3, 1000)).epsilon(1e-12));
  CHECK(r.phi.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("geometric BM along the constant instanton follows exp(-t/3)") {
  auto m = geometric_bm();
  double prev = 1.0;
  for (int nt : {500, 1000, 2000}) {
    TimeGrid g(nt, 1.0);
    auto r = solve_forward(m.system, m.observable, NoiseVector::constant(g, 1, std::sqrt(2.0) / 3.0));
    double err = 0.0;
    for (int k = 0; k <= nt; ++k) err = std::max(err, std::abs(r.phi.at(k, 0) - std::exp(-g.time(k) / 3.0)));
    CHECK(err < prev);
    CHECK(err < 1.0 / nt);
    prev = err;
  }
}

TEST_CASE("Euler forward solve converges at first order") {
  // Noise-free GBM: f(phi_T) = (log phi_T)^2 / 2 with exact limit 1/2.
  auto m = geometric_bm();
  auto err = [&](int nt) {
    TimeGrid g(nt, 1.0);
    return std::abs(solve_forward(m.system, m.observable, NoiseVector(g, 1)).value - 0.5);
  };
  for (int nt : {100, 400}) {
    const double ratio = err(nt) / err(2 * nt);
    INFO("nt = " << nt);
    CHECK(ratio > 1.7);
    CHECK(ratio < 2.3);
  }
  // Smooth forcing on the nonlinear 2D system, against a fine reference.
  auto c = test::coupled_2d();
  auto value = [&](int nt) {
    TimeGrid g(nt, 1.0);
    NoiseVector eta(g, 2);
    for (int k = 0; k < nt; ++k) eta.at(k, 0) = std::sin(3.0 * g.time(k)), eta.at(k, 1) = 0.5;
    return solve_forward(c.system, c.observable, eta).value;
  };
  const double ref = value(1 << 17);
  const double ratio = std::abs(value(200) - ref) / std::abs(value(400) - ref);
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("gradient with zero multiplier is zero") {
  auto m = predator_prey();
  TimeGrid g(50, 10.0);
  std::mt19937_64 rng(1);
  auto r = gradient(m.system, m.observable, test::random_noise(g, 2, rng, 0.1), 0.0);
  CHECK(test::max_abs(r.gradient) == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(2);
  const std::vector<std::pair<Model, double>> cases = {{geometric_bm(), 0.3}, {predator_prey(), 0.05},
                                                       {test::coupled_2d(), 0.3}, {test::cubic_additive(), 0.5}};
  for (const auto& [m, scale] : cases) {
    TimeGrid g(64, m.system.horizon);
    for (int trial = 0; trial < 5; ++trial) {
      auto eta = test::random_noise(g, m.system.dim, rng, scale);
      auto d = test::random_noise(g, m.system.dim, rng);
      const double lambda = 0.7;
      auto r = gradient(m.system, m.observable, eta, lambda);
      const double analytic = inner_product(r.gradient, d);
      const double fd = directional_fd(m, eta, d, lambda, 1e-5);
      INFO(m.system.name);
      CHECK(std::abs(analytic - fd) <= 1e-5 * std::abs(fd));
    }
  }
}

TEST_CASE("gradient recovers the GBM instanton") {
  // eta = lambda dF/deta at eta = sqrt(2)/3, lambda = -1; the residual vanishes as dt -> 0.
  auto m = geometric_bm();
  double prev = 1e300;
  for (int nt : {250, 1000, 4000}) {
    TimeGrid g(nt, 1.0);
    auto eta = NoiseVector::constant(g, 1, std::sqrt(2.0) / 3.0);
    auto r = gradient(m.system, m.observable, eta, -1.0);
    const double res = test::max_abs(r.gradient - eta);
    CHECK(res < prev);
    prev = res;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("adjoint terminal condition and pairing") {
  auto m = test::coupled_2d();
  TimeGrid g(40, 1.0);
  std::mt19937_64 rng(9);
  auto eta = test::random_noise(g, 2, rng, 0.3);
  auto r = gradient(m.system, m.observable, eta, 1.5);
  auto fwd = solve_forward(m.system, m.observable, eta);
  const auto xT = fwd.phi.final_state();
  CHECK(r.theta.at(40, 0) == doctest::Approx(1.5 * (1.0 + xT[1])));
  CHECK(r.theta.at(40, 1) == doctest::Approx(1.5 * xT[0]));
  CHECK(r.value == fwd.value);
}

TEST_CASE("zero-noise sampling equals the deterministic solve") {
  auto m = predator_prey();
  TimeGrid g(200, 10.0);
  std::mt19937_64 rng(5);
  auto s = sample_path(m.system, m.observable, g, 0.0, rng);
  auto d = solve_forward(m.system, m.observable, NoiseVector(g, 2));
  CHECK(s.path.values() == d.phi.values());
  CHECK(s.value == d.value);
}

TEST_CASE("geometric BM sample mean") {
  auto m = geometric_bm();
  TimeGrid g(1000, 1.0);
  std::mt19937_64 rng(2026);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_path(m.system, m.observable, g, 0.01, rng).path.final_state()[0];
    sum += x, sq += x * x;
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - std::exp(-1.0)) < 3.0 * se);
}

TEST_CASE("additive OU sample variance") {
  auto m = additive_ou();
  TimeGrid g(1000, 1.0);
  std::mt19937_64 rng(77);
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_final_value(m.system, m.observable, g, 1.0, rng);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) m2 += (x - mean) * (x - mean), m4 += std::pow(x - mean, 4);
  m2 /= n - 1, m4 /= n;
  const double se = std::sqrt((m4 - m2 * m2) / n);
  CHECK(std::abs(m2 - (1.0 - std::exp(-2.0)) / 2.0) < 3.0 * se);
}

TEST_CASE("Stratonovich sampling agrees with a Heun reference") {
  // dX = -X dt + sqrt(2 eps) X o dW, f = log X: exactly log X_T ~ N(-T, 2 eps T).
  // The Heun midpoint scheme below integrates the Stratonovich form directly.
  auto m = strato_gbm();
  TimeGrid g(200, 1.0);
  const double eps = 0.05, dt = g.dt();
  const int n = 100000;
  std::mt19937_64 rng_lib(31), rng_heun(32);
  std::normal_distribution<double> nd;
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  for (int i = 0; i < n; ++i) {
    const double a = sample_final_value(m.system, m.observable, g, eps, rng_lib);
    double x = 1.0;
    for (int k = 0; k < g.steps(); ++k) {
      const double dw = std::sqrt(dt) * nd(rng_heun);
      auto incr = [&](double y) { return -y * dt + std::sqrt(2.0 * eps) * y * dw; };
      const double pred = x + incr(x);
      x += 0.5 * (incr(x) + incr(pred));
    }
    const double b = std::log(x);
    s1 += a, q1 += a * a, s2 += b, q2 += b * b;
  }
  const double m1 = s1 / n, v1 = q1 / n - m1 * m1, m2 = s2 / n, v2 = q2 / n - m2 * m2;
  const double se_mean = std::sqrt((v1 + v2) / n);
  const double se_var = std::sqrt(2.0 * (v1 * v1 + v2 * v2) / n);
  CHECK(std::abs(m1 - m2) < 4.0 * se_mean);
  CHECK(std::abs(v1 - v2) < 4.0 * se_var);
  CHECK(std::abs(m1 + 1.0) < 4.0 * std::sqrt(v1 / n));
  CHECK(std::abs(v1 - 2.0 * eps) < 4.0 * std::sqrt(2.0 * v1 * v1 / n));
}

TEST_CASE("diverging samples are reported as NaN") {
  Model m = test::cubic_additive();
  m.system.drift = [](std::span<const double> x, std::span<double> o) { o[0] = x[0] * x[0] * x[0] * 1e6; };
  m.system.x0 = {1.0};
  TimeGrid g(100, 1.0);
  std::mt19937_64 rng(1);
  CHECK(std::isnan(sample_final_value(m.system, m.observable, g, 0.1, rng)));
  CHECK_THROWS_AS(sample_path(m.system, m.observable, g, 0.1, rng), DivergenceError);
}
