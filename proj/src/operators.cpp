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

#include "sorm/operators.hpp"

#include <cmath>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

// y += a * M x  (M row-major n x n)
inline void gemv(const double* M, const double* x, double a, double* y, int n) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += M[i * n + j] * x[j];
    y[i] += a * s;
  }
}

// y += a * M^T x
inline void gemv_t(const double* M, const double* x, double a, double* y, int n) {
  for (int i = 0; i < n; ++i) {
    const double xi = a * x[i];
    for (int j = 0; j < n; ++j) y[j] += M[i * n + j] * xi;
  }
}

void check_direction(const SolutionContext& ctx, const NoiseVector& deta) {
  if (deta.dim() != ctx.dim() || !(deta.grid() == ctx.grid()))
    throw DimensionError("direction does not live on the context's grid");
}

// gamma_{k+1} = gamma_k + dt (L_k gamma_k + S_k deta_k), gamma_0 = 0.
std::vector<double> tangent_sweep(const SolutionContext& ctx, const NoiseVector& deta) {
  const int n = ctx.dim();
  const int nt = ctx.grid().steps();
  const double dt = ctx.grid().dt();
  std::vector<double> gamma(static_cast<std::size_t>(nt + 1) * n, 0.0);
  for (int k = 0; k < nt; ++k) {
    const double* g = &gamma[static_cast<std::size_t>(k) * n];
    double* next = &gamma[static_cast<std::size_t>(k + 1) * n];
    for (int i = 0; i < n; ++i) next[i] = g[i];
    gemv(ctx.L(k), g, dt, next, n);
    gemv(ctx.S(k), deta.step(k).data(), dt, next, n);
  }
  return gamma;
}

}  // namespace

SolutionContext::SolutionContext(const SdeSystem& system, const Observable& obs, const NoiseVector& eta,
                                 double lambda)
    : n_(system.dim),
      convention_(system.convention),
      eta_(eta),
      lambda_(lambda),
      grad_(sorm::gradient(system, obs, eta, lambda)) {
  const int n = n_;
  const int nt = eta.grid().steps();
  const double dt = eta.grid().dt();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  S_.assign(nt * nn, 0.0);
  L_.assign(nt * nn, 0.0);
  P_.assign(nt * nn, 0.0);
  H_.assign(nt * nn, 0.0);
  Hf_.assign(nn, 0.0);

  std::vector<double> jac(nn), hess(nn * n), dsig(nn * n), d2sig(nn * nn);
  double trace_sum = 0.0;
  for (int k = 0; k < nt; ++k) {
    auto x = grad_.phi.step(k);
    auto e = eta.step(k);
    auto p = grad_.theta.step(k + 1);
    double* S = &S_[mat(k)];
    double* L = &L_[mat(k)];
    double* P = &P_[mat(k)];
    double* H = &H_[mat(k)];
    system.diffusion(x, {S, nn});
    system.drift_jacobian(x, jac);
    system.drift_hessian(x, hess);
    system.diffusion_jacobian(x, dsig);
    system.diffusion_hessian(x, d2sig);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        double v = jac[i * n + l];
        for (int j = 0; j < n; ++j) v += dsig[(i * n + j) * n + l] * e[j];
        L[i * n + l] = v;
      }
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += p[i] * dsig[(i * n + j) * n + l];
        P[l * n + j] = v;
      }
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
          double inner = hess[(i * n + l) * n + m];
          for (int j = 0; j < n; ++j) inner += d2sig[((i * n + j) * n + l) * n + m] * e[j];
          v += p[i] * inner;
        }
        H[l * n + m] = v;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) trace_sum += S[j * n + m] * dsig[(i * n + m) * n + j] * p[i];
  }
  ito_trace_ = dt * trace_sum;
  obs.hessian(grad_.phi.final_state(), Hf_);
  for (double& v : Hf_) v *= lambda;
}

VariationState variation_state(const SolutionContext& ctx, const NoiseVector& deta) {
  check_direction(ctx, deta);
  const int n = ctx.dim();
  const int nt = ctx.grid().steps();
  const double dt = ctx.grid().dt();
  VariationState st{StatePath(ctx.grid(), n), StatePath(ctx.grid(), n), StatePath(ctx.grid(), n),
                    StatePath(ctx.grid(), n), {}};
  st.gamma1.values() = tangent_sweep(ctx, deta);
  st.L.reserve(static_cast<std::size_t>(nt) * n * n);
  for (int k = 0; k < nt; ++k) st.L.insert(st.L.end(), ctx.L(k), ctx.L(k) + n * n);

  auto gN = st.gamma1.step(nt);
  auto zN = st.zeta.step(nt);
  auto rN = st.zeta_reg.step(nt);
  gemv(ctx.final_hessian(), gN.data(), 1.0, zN.data(), n);
  gemv(ctx.final_hessian(), gN.data(), 1.0, rN.data(), n);
  for (int k = nt - 1; k >= 0; --k) {
    const double* g = st.gamma1.step(k).data();
    const double* d = deta.step(k).data();
    for (auto* path : {&st.zeta, &st.zeta_sing, &st.zeta_reg}) {
      const double* z1 = path->step(k + 1).data();
      double* z0 = path->step(k).data();
      for (int i = 0; i < n; ++i) z0[i] = z1[i];
      gemv_t(ctx.L(k), z1, dt, z0, n);
      if (path != &st.zeta_reg) gemv(ctx.P(k), d, dt, z0, n);
      if (path != &st.zeta_sing) gemv(ctx.H(k), g, dt, z0, n);
    }
  }
  return st;
}

NoiseVector hessian_apply(const SolutionContext& ctx, const NoiseVector& deta) {
  check_direction(ctx, deta);
  const int n = ctx.dim();
  const int nt = ctx.grid().steps();
  const double dt = ctx.grid().dt();
  const auto gamma = tangent_sweep(ctx, deta);
  NoiseVector out(ctx.grid(), n);
  std::vector<double> zeta(n, 0.0), prev(n);
  gemv(ctx.final_hessian(), &gamma[static_cast<std::size_t>(nt) * n], 1.0, zeta.data(), n);
  for (int k = nt - 1; k >= 0; --k) {
    const double* g = &gamma[static_cast<std::size_t>(k) * n];
    double* o = out.step(k).data();
    gemv_t(ctx.S(k), zeta.data(), 1.0, o, n);
    gemv_t(ctx.P(k), g, 1.0, o, n);
    prev = zeta;
    gemv_t(ctx.L(k), zeta.data(), dt, prev.data(), n);
    gemv(ctx.P(k), deta.step(k).data(), dt, prev.data(), n);
    gemv(ctx.H(k), g, dt, prev.data(), n);
    zeta.swap(prev);
  }
  return out;
}

NoiseVector atilde_apply(const SolutionContext& ctx, const NoiseVector& deta) {
  check_direction(ctx, deta);
  const int n = ctx.dim();
  const int nt = ctx.grid().steps();
  const double dt = ctx.grid().dt();
  const auto gamma = tangent_sweep(ctx, deta);
  NoiseVector out(ctx.grid(), n);
  std::vector<double> zeta(n, 0.0), prev(n);
  for (int k = nt - 1; k >= 0; --k) {
    const double* g = &gamma[static_cast<std::size_t>(k) * n];
    double* o = out.step(k).data();
    gemv_t(ctx.S(k), zeta.data(), 1.0, o, n);
    gemv_t(ctx.P(k), g, 1.0, o, n);
    prev = zeta;
    gemv_t(ctx.L(k), zeta.data(), dt, prev.data(), n);
    gemv(ctx.P(k), deta.step(k).data(), dt, prev.data(), n);
    zeta.swap(prev);
  }
  return out;
}

NoiseVector regularized_apply(const SolutionContext& ctx, const NoiseVector& deta) {
  check_direction(ctx, deta);
  const int n = ctx.dim();
  const int nt = ctx.grid().steps();
  const double dt = ctx.grid().dt();
  const auto gamma = tangent_sweep(ctx, deta);
  NoiseVector out(ctx.grid(), n);
  std::vector<double> zeta(n, 0.0), prev(n);
  gemv(ctx.final_hessian(), &gamma[static_cast<std::size_t>(nt) * n], 1.0, zeta.data(), n);
  for (int k = nt - 1; k >= 0; --k) {
    gemv_t(ctx.S(k), zeta.data(), 1.0, out.step(k).data(), n);
    prev = zeta;
    gemv_t(ctx.L(k), zeta.data(), dt, prev.data(), n);
    gemv(ctx.H(k), &gamma[static_cast<std::size_t>(k) * n], dt, prev.data(), n);
    zeta.swap(prev);
  }
  return out;
}

NoiseVector project_perp(const NoiseVector& eta_ref, const NoiseVector& v) {
  const double rr = inner_product(eta_ref, eta_ref);
  if (!(rr > 0.0)) throw Error(ErrorCode::DegenerateReference, "projection reference vector has zero norm");
  NoiseVector out = v;
  out.axpy(-inner_product(eta_ref, v) / rr, eta_ref);
  return out;
}

OperatorHandle hessian_operator(std::shared_ptr<const SolutionContext> ctx) {
  const TimeGrid grid = ctx->grid();
  const int n = ctx->dim();
  return {[ctx](const NoiseVector& v) { return hessian_apply(*ctx, v); }, grid, n, "A"};
}

OperatorHandle atilde_operator(std::shared_ptr<const SolutionContext> ctx) {
  const TimeGrid grid = ctx->grid();
  const int n = ctx->dim();
  return {[ctx](const NoiseVector& v) { return atilde_apply(*ctx, v); }, grid, n, "Atilde"};
}

OperatorHandle regularized_operator(std::shared_ptr<const SolutionContext> ctx) {
  const TimeGrid grid = ctx->grid();
  const int n = ctx->dim();
  return {[ctx](const NoiseVector& v) { return regularized_apply(*ctx, v); }, grid, n, "A-Atilde"};
}

OperatorHandle compose_projected(OperatorHandle op, const NoiseVector& eta_ref) {
  if (!(inner_product(eta_ref, eta_ref) > 0.0))
    throw Error(ErrorCode::DegenerateReference, "projection reference vector has zero norm");
  if (eta_ref.dim() != op.state_dim || !(eta_ref.grid() == op.grid))
    throw DimensionError("projection reference does not match the operator's space");
  auto inner = op.apply;
  OperatorHandle out{nullptr, op.grid, op.state_dim, "pr(" + op.label + ")pr"};
  out.apply = [inner, eta_ref](const NoiseVector& v) { return project_perp(eta_ref, inner(project_perp(eta_ref, v))); };
  return out;
}

}  // namespace sorm
