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

#include "sorm/riccati.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Coefficients of the Riccati right-hand side at one time.
struct Coefficients {
  MatrixXd J;      // grad b
  MatrixXd K;      // <hess b, theta>
};

class RiccatiRhs {
 public:
  RiccatiRhs(const SdeSystem& system, const InstantonSolution& sol)
      : sys_(system), sol_(sol), n_(system.dim), x_(n_), th_(n_), jac_(n_ * n_), hess_(n_ * n_ * n_), sig_(n_ * n_) {
    // Additive: sigma sigma^T is the same everywhere.
    const auto x0 = sol.phi.step(0);
    sys_.diffusion(x0, sig_);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> S(sig_.data(), n_, n_);
    SS_ = S * S.transpose();
  }

  // Coefficients at node k + s, s in [0, 1].
  Coefficients at(int k, double s) {
    const int k1 = std::min(k + 1, sol_.phi.grid().steps());
    for (int i = 0; i < n_; ++i) {
      x_[i] = (1.0 - s) * sol_.phi.at(k, i) + s * sol_.phi.at(k1, i);
      th_[i] = (1.0 - s) * sol_.theta.at(k, i) + s * sol_.theta.at(k1, i);
    }
    sys_.drift_jacobian(x_, jac_);
    sys_.drift_hessian(x_, hess_);
    Coefficients c{MatrixXd(n_, n_), MatrixXd::Zero(n_, n_)};
    for (int i = 0; i < n_; ++i)
      for (int l = 0; l < n_; ++l) {
        c.J(i, l) = jac_[i * n_ + l];
        for (int m = 0; m < n_; ++m) c.K(l, m) += th_[i] * hess_[(i * n_ + l) * n_ + m];
      }
    return c;
  }

  MatrixXd dQ(const MatrixXd& Q, const Coefficients& c) const {
    return SS_ + Q * c.J.transpose() + c.J * Q + Q * c.K * Q;
  }

 private:
  const SdeSystem& sys_;
  const InstantonSolution& sol_;
  int n_;
  std::vector<double> x_, th_, jac_, hess_, sig_;
  MatrixXd SS_;
};

std::vector<double> flatten(const MatrixXd& M) {
  std::vector<double> out(M.size());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out[i * M.cols() + j] = M(i, j);
  return out;
}

}  // namespace

RiccatiState riccati_solve(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                           const InstantonSolution& sol) {
  if (!system.additive) throw Error(ErrorCode::InvalidArgument, "Riccati prefactor supports additive noise only");
  if (!(sol.eta.grid() == grid) || sol.eta.dim() != system.dim)
    throw DimensionError("instanton solution does not match the requested grid/system");
  if (sol.lambda == 0.0) throw Error(ErrorCode::DegenerateReference, "Riccati prefactor undefined for lambda = 0");

  const int n = system.dim;
  const int nt = grid.steps();
  const double dt = grid.dt();
  RiccatiRhs rhs(system, sol);

  RiccatiState st;
  st.dim = n;
  st.Q.reserve(nt + 1);
  MatrixXd Q = MatrixXd::Zero(n, n);
  st.Q.push_back(flatten(Q));

  auto trace_term = [](const MatrixXd& Qm, const Coefficients& c) { return (c.K * Qm).trace(); };

  Coefficients c0 = rhs.at(0, 0.0);
  for (int k = 0; k < nt; ++k) {
    const Coefficients ch = rhs.at(k, 0.5);
    const Coefficients c1 = rhs.at(k, 1.0);
    const MatrixXd k1 = rhs.dQ(Q, c0);
    const MatrixXd Q2 = Q + 0.5 * dt * k1;
    const MatrixXd k2 = rhs.dQ(Q2, ch);
    const MatrixXd Q3 = Q + 0.5 * dt * k2;
    const MatrixXd k3 = rhs.dQ(Q3, ch);
    const MatrixXd Q4 = Q + dt * k3;
    const MatrixXd k4 = rhs.dQ(Q4, c1);
    st.curvature_integral +=
        dt / 6.0 * (trace_term(Q, c0) + 2.0 * trace_term(Q2, ch) + 2.0 * trace_term(Q3, ch) + trace_term(Q4, c1));
    Q += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!Q.allFinite()) throw DivergenceError("Riccati solution blew up", k + 1);
    st.max_asymmetry = std::max(st.max_asymmetry, (Q - Q.transpose()).cwiseAbs().maxCoeff());
    Q = 0.5 * (Q + Q.transpose());
    st.min_eigenvalue = std::min(st.min_eigenvalue, Eigen::SelfAdjointEigenSolver<MatrixXd>(Q).eigenvalues()(0));
    st.Q.push_back(flatten(Q));
    c0 = c1;
  }

  const auto xT = sol.phi.final_state();
  std::vector<double> gf(n), hf(n * n);
  obs.gradient(xT, gf);
  obs.hessian(xT, hf);
  const Eigen::Map<const VectorXd> g(gf.data(), n);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Hf(hf.data(), n, n);
  const MatrixXd U = MatrixXd::Identity(n, n) - sol.lambda * Hf * Q;
  st.U = flatten(U);

  Eigen::FullPivLU<MatrixXd> lu(U);
  const double detU = lu.determinant();
  if (!lu.isInvertible() || std::abs(detU) <= 1e-12)
    throw Error(ErrorCode::Singular, "U is singular at final time (Riccati pseudo-singularity)");
  const double quad = g.dot(Q * lu.solve(g));
  const double prod = detU * quad;
  if (!(prod > 0.0))
    throw NondegeneracyError("det(U) <grad f, Q U^-1 grad f> = " + std::to_string(prod) + " is not positive", prod);
  st.C = std::exp(0.5 * st.curvature_integral) / (std::abs(sol.lambda) * std::sqrt(prod));
  return st;
}

double riccati_prefactor(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                         const InstantonSolution& sol) {
  return riccati_solve(system, obs, grid, sol).C;
}

}  // namespace sorm
