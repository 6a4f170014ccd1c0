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
#include <memory>
#include <random>

#include "sorm/errors.hpp"
#include "sorm/models.hpp"
#include "sorm/operators.hpp"
#include "sorm/propagation.hpp"
#include "support.hpp"

using namespace sorm;

namespace {

using Ctx = std::shared_ptr<const SolutionContext>;

Ctx gbm_context(int nt) {
  static const Model m = geometric_bm();
  TimeGrid g(nt, 1.0);
  return std::make_shared<const SolutionContext>(m.system, m.observable,
                                                 NoiseVector::constant(g, 1, std::sqrt(2.0) / 3.0), -1.0);
}

struct Case {
  Model model;
  double scale;
  double lambda;
};

std::vector<Case> cases() {
  return {{geometric_bm(), 0.3, -1.0},
          {predator_prey(), 0.05, 0.12},
          {test::coupled_2d(), 0.3, 0.8},
          {test::coupled_2d_stratonovich(), 0.3, 0.8},
          {strato_gbm(), 0.3, -0.5},
          {test::cubic_additive(), 0.5, 1.3}};
}

Ctx context(const Case& c, int nt, std::mt19937_64& rng) {
  TimeGrid g(nt, c.model.system.horizon);
  return std::make_shared<const SolutionContext>(c.model.system, c.model.observable,
                                                 test::random_noise(g, c.model.system.dim, rng, c.scale), c.lambda);
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("operators are linear") {
  std::mt19937_64 rng(1);
  for (const auto& c : cases()) {
    auto ctx = context(c, 48, rng);
    for (auto op : {hessian_operator(ctx), atilde_operator(ctx), regularized_operator(ctx)}) {
      auto u = test::random_noise(op.grid, op.state_dim, rng), v = test::random_noise(op.grid, op.state_dim, rng);
      auto lhs = op(1.7 * u + (-0.4) * v);
      auto rhs = 1.7 * op(u) + (-0.4) * op(v);
      INFO(c.model.system.name << " " << op.label);
      CHECK(test::rel_diff(lhs, rhs) < 1e-10);
    }
  }
}

TEST_CASE("operators are symmetric in the weighted inner product") {
  std::mt19937_64 rng(2);
  for (const auto& c : cases()) {
    auto ctx = context(c, 64, rng);
    auto ops = {hessian_operator(ctx), atilde_operator(ctx), regularized_operator(ctx),
                compose_projected(hessian_operator(ctx), ctx->eta()),
                compose_projected(regularized_operator(ctx), ctx->eta())};
    for (const auto& op : ops) {
      for (int trial = 0; trial < 5; ++trial) {
        auto u = test::random_noise(op.grid, op.state_dim, rng), v = test::random_noise(op.grid, op.state_dim, rng);
        const double a = inner_product(u, op(v)), b = inner_product(op(u), v);
        const double scale = norm(u) * norm(v) * std::max(test::max_abs(op(u)), 1e-300);
        INFO(c.model.system.name << " " << op.label);
        CHECK(std::abs(a - b) <= 1e-8 * std::max(std::abs(a), scale));
      }
    }
  }
}

TEST_CASE("A equals its regular plus singular parts") {
  std::mt19937_64 rng(3);
  for (const auto& c : cases()) {
    auto ctx = context(c, 64, rng);
    for (int trial = 0; trial < 5; ++trial) {
      auto d = test::random_noise(ctx->grid(), ctx->dim(), rng);
      auto full = hessian_apply(*ctx, d);
      auto split = regularized_apply(*ctx, d) + atilde_apply(*ctx, d);
      INFO(c.model.system.name);
      CHECK(test::rel_diff(full, split) < 1e-10);
    }
  }
}

TEST_CASE("Hessian action matches finite differences of the gradient") {
  std::mt19937_64 rng(4);
  for (const auto& c : cases()) {
    auto ctx = context(c, 48, rng);
    for (int trial = 0; trial < 3; ++trial) {
      auto d = test::random_noise(ctx->grid(), ctx->dim(), rng);
      const double h = 1e-5;
      auto plus = ctx->eta(), minus = ctx->eta();
      plus.axpy(h, d);
      minus.axpy(-h, d);
      auto gp = gradient(c.model.system, c.model.observable, plus, c.lambda).gradient;
      auto gm = gradient(c.model.system, c.model.observable, minus, c.lambda).gradient;
      auto fd = (1.0 / (2.0 * h)) * (gp - gm);
      auto an = hessian_apply(*ctx, d);
      INFO(c.model.system.name);
      CHECK(test::rel_diff(an, fd) < 1e-4);
      // second difference of lambda F along d
      auto val = [&](const NoiseVector& e) { return c.lambda * solve_forward(c.model.system, c.model.observable, e).value; };
      const double h2 = 1e-4;
      auto p2 = ctx->eta(), m2 = ctx->eta();
      p2.axpy(h2, d);
      m2.axpy(-h2, d);
      const double second = (val(p2) - 2.0 * val(ctx->eta()) + val(m2)) / (h2 * h2);
      CHECK(rel(inner_product(d, an), second) < 1e-4);
    }
  }
}

TEST_CASE("linear additive system has vanishing second variation") {
  auto m = additive_ou();
  TimeGrid g(50, 1.0);
  std::mt19937_64 rng(5);
  auto ctx = std::make_shared<const SolutionContext>(m.system, m.observable, test::random_noise(g, 1, rng), 2.0);
  auto d = test::random_noise(g, 1, rng);
  CHECK(test::max_abs(hessian_apply(*ctx, d)) == 0.0);
  CHECK(test::max_abs(atilde_apply(*ctx, d)) == 0.0);
  CHECK(test::max_abs(regularized_apply(*ctx, d)) == 0.0);
}

TEST_CASE("additive noise has no singular part") {
  auto m = test::cubic_additive();
  TimeGrid g(50, 1.0);
  std::mt19937_64 rng(6);
  auto ctx = std::make_shared<const SolutionContext>(m.system, m.observable, test::random_noise(g, 1, rng), 1.0);
  auto d = test::random_noise(g, 1, rng);
  CHECK(test::max_abs(atilde_apply(*ctx, d)) == 0.0);
  CHECK(test::rel_diff(regularized_apply(*ctx, d), hessian_apply(*ctx, d)) < 1e-14);
  CHECK(test::max_abs(hessian_apply(*ctx, d)) > 0.0);
}

TEST_CASE("GBM Hessian on the constant direction is -2") {
  for (int nt : {100, 1000}) {
    auto ctx = gbm_context(nt);
    auto out = hessian_apply(*ctx, NoiseVector::constant(ctx->grid(), 1, 1.0));
    for (double v : out.values()) CHECK(v == doctest::Approx(-2.0).epsilon(3.0 / nt));
    const double spread = *std::max_element(out.values().begin(), out.values().end()) -
                          *std::min_element(out.values().begin(), out.values().end());
    CHECK(spread < 1e-10);
  }
}

TEST_CASE("GBM singular part carries the trace 2/3") {
  double prev_trace = 1.0, prev_quad = 1.0;
  for (int nt : {100, 1000}) {
    auto ctx = gbm_context(nt);
    const double trace = ctx->ito_trace_integral();
    auto e = NoiseVector::constant(ctx->grid(), 1, 1.0);
    const double quad = inner_product(e, atilde_apply(*ctx, e));
    CHECK(std::abs(trace - 2.0 / 3.0) < prev_trace);
    CHECK(std::abs(quad - 2.0 / 3.0) < prev_quad);
    prev_trace = std::abs(trace - 2.0 / 3.0);
    prev_quad = std::abs(quad - 2.0 / 3.0);
  }
  CHECK(prev_trace < 1e-3);
  CHECK(prev_quad < 1e-3);
}

TEST_CASE("GBM regular part decays at least like i^-2") {
  // Linear b and sigma make the discrete regular part rank one: every mode
  // beyond the leading one is round-off, far below |mu_1| i^-2.
  for (int nt : {100, 200}) {
    auto ctx = gbm_context(nt);
    auto mu = test::eigenvalues_by_magnitude(test::assemble(regularized_operator(ctx)));
    CHECK(mu(0) == doctest::Approx(-2.0 - 2.0 / 3.0).epsilon(0.02));
    for (Eigen::Index i = 1; i < mu.size(); ++i) {
      CHECK(std::abs(mu(i)) <= std::abs(mu(0)) / double((i + 1) * (i + 1)));
      CHECK(std::abs(mu(i)) < 1e-12);
    }
  }
}

TEST_CASE("projection onto the orthogonal complement") {
  TimeGrid g(30, 1.0);
  std::mt19937_64 rng(7);
  auto ref = test::random_noise(g, 2, rng), v = test::random_noise(g, 2, rng);
  CHECK(test::max_abs(project_perp(ref, ref)) < 1e-14);
  auto p = project_perp(ref, v);
  CHECK(std::abs(inner_product(p, ref)) < 1e-12 * norm(v) * norm(ref));
  CHECK(test::rel_diff(project_perp(ref, p), p) < 1e-12);
  CHECK(test::rel_diff(project_perp(ref, p), p) < 1e-12);
  CHECK_THROWS_AS(project_perp(NoiseVector(g, 2), v), Error);
}

TEST_CASE("projected operator annihilates the reference and keeps symmetry") {
  std::mt19937_64 rng(8);
  auto ctx = context(cases()[1], 40, rng);
  auto op = compose_projected(hessian_operator(ctx), ctx->eta());
  CHECK(norm(op(ctx->eta())) < 1e-12 * norm(ctx->eta()) * test::max_abs(op(test::random_noise(op.grid, 2, rng))));
  auto M = test::assemble(op);
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * M.cwiseAbs().maxCoeff());
}

TEST_CASE("projected GBM Hessian loses only the constant mode") {
  auto ctx = gbm_context(64);
  auto full = test::eigenvalues_by_magnitude(test::assemble(hessian_operator(ctx)));
  auto proj = test::eigenvalues_by_magnitude(test::assemble(compose_projected(hessian_operator(ctx), ctx->eta())));
  // eta is constant, so the -2 mode (the constant direction) is removed exactly.
  CHECK(full(0) == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(std::abs(proj(0)) < 0.1);
  for (Eigen::Index i = 0; i + 1 < full.size(); ++i) CHECK(std::abs(full(i + 1) - proj(i)) < 0.05);
}

TEST_CASE("assembled matrices reproduce the matrix-free action") {
  std::mt19937_64 rng(9);
  for (const auto& c : cases()) {
    auto ctx = context(c, 24, rng);
    for (const auto& op : {hessian_operator(ctx), atilde_operator(ctx), regularized_operator(ctx)}) {
      auto M = test::assemble(op);
      for (int trial = 0; trial < 50; ++trial) {
        auto r = test::random_noise(op.grid, op.state_dim, rng);
        Eigen::Map<const Eigen::VectorXd> rv(r.values().data(), static_cast<Eigen::Index>(r.size()));
        Eigen::VectorXd mv = M * rv;
        auto a = op(r);
        double err = 0.0;
        for (Eigen::Index i = 0; i < mv.size(); ++i) err = std::max(err, std::abs(mv(i) - a.values()[i]));
        INFO(c.model.system.name << " " << op.label);
        CHECK(err <= 1e-9 * std::max(1.0, test::max_abs(a)));
      }
    }
  }
}

TEST_CASE("operator inputs are validated") {
  auto ctx = gbm_context(20);
  CHECK_THROWS_AS(hessian_apply(*ctx, NoiseVector(TimeGrid(21, 1.0), 1)), DimensionError);
  CHECK_THROWS_AS(regularized_apply(*ctx, NoiseVector(TimeGrid(20, 1.0), 2)), DimensionError);
}
