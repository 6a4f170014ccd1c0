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

#include "sorm/spectrum.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "sorm/errors.hpp"

namespace sorm {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ARPACK's floor for relative residuals of tiny Ritz values.
const double kEps23 = std::pow(std::numeric_limits<double>::epsilon(), 2.0 / 3.0);

class Applier {
 public:
  explicit Applier(const OperatorHandle& op) : op_(op), buf_(op.size()) {}

  VectorXd operator()(const Eigen::Ref<const VectorXd>& v) {
    std::copy(v.data(), v.data() + v.size(), buf_.begin());
    NoiseVector out = op_(NoiseVector(op_.grid, op_.state_dim, buf_));
    if (out.values().size() != buf_.size()) throw DimensionError("operator '" + op_.label + "' changed the dimension");
    ++count_;
    return Eigen::Map<const VectorXd>(out.values().data(), static_cast<Eigen::Index>(buf_.size()));
  }

  long count() const noexcept { return count_; }

 private:
  const OperatorHandle& op_;
  std::vector<double> buf_;
  long count_ = 0;
};

std::vector<int> by_magnitude(const VectorXd& theta) {
  std::vector<int> idx(theta.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(theta[a]) > std::abs(theta[b]); });
  return idx;
}

NoiseVector to_noise(const OperatorHandle& op, const VectorXd& v) {
  return NoiseVector(op.grid, op.state_dim, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

SpectrumResult leading_eigenvalues(const OperatorHandle& op, int M, const LanczosOptions& options) {
  const auto N = static_cast<Eigen::Index>(op.size());
  if (M < 1 || M >= N)
    throw Error(ErrorCode::InvalidArgument, "need 1 <= M < dim (M = " + std::to_string(M) + ", dim = " +
                                                std::to_string(N) + ")");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "Lanczos tolerance must be positive");

  const double dt = op.grid.dt();
  Eigen::Index m = options.basis > 0 ? options.basis : std::max(2 * M + 20, 100);
  m = std::clamp<Eigen::Index>(m, M + 1, N);

  Applier A(op);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;

  MatrixXd V(N, m + 1);
  MatrixXd T = MatrixXd::Zero(m, m);
  // Column j of T as predicted before computing it: carried couplings from the
  // previous cycle (arrow) and the last normalization constant.
  VectorXd expected = VectorXd::Zero(m);

  auto orthonormal_random = [&](Eigen::Index cols) {
    VectorXd v(N);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = normal(rng);
    for (int pass = 0; pass < 2 && cols > 0; ++pass) v -= V.leftCols(cols) * (dt * (V.leftCols(cols).transpose() * v));
    return VectorXd(v / (std::sqrt(dt) * v.norm()));
  };

  V.col(0) = orthonormal_random(0);
  Eigen::Index k = 0;
  double beta = 0.0, scale = 0.0;

  SpectrumResult out;
  out.requested = M;
  VectorXd theta;
  MatrixXd Y;
  std::vector<int> order;

  for (;;) {
    for (Eigen::Index j = k; j < m; ++j) {
      VectorXd w = A(V.col(j));
      auto B = V.leftCols(j + 1);
      VectorXd h = dt * (B.transpose() * w);
      w -= B * h;
      VectorXd h2 = dt * (B.transpose() * w);
      w -= B * h2;
      h += h2;

      scale = std::max(scale, std::abs(h[j]));
      const double mismatch = (h.head(j) - expected.head(j)).cwiseAbs().maxCoeff();
      // The absolute floor keeps round-off-sized operators from tripping the check.
      if (j > 0 && mismatch > 1e-6 * scale + 1e-11)
        throw Error(ErrorCode::Operator, "operator '" + op.label + "' is not symmetric (Lanczos coupling mismatch " +
                                             std::to_string(mismatch) + ")");
      T.col(j).head(j + 1) = h;
      T.row(j).head(j + 1) = h.transpose();

      beta = std::sqrt(dt) * w.norm();
      scale = std::max(scale, beta);
      expected.setZero();
      if (beta <= 1e-13 * std::max(scale, 1e-300)) {
        // Invariant subspace: continue with a fresh direction, zero coupling.
        beta = 0.0;
        V.col(j + 1) = orthonormal_random(j + 1);
      } else {
        V.col(j + 1) = w / beta;
        if (j + 1 < m) expected[j] = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(T);
    theta = eig.eigenvalues();
    Y = eig.eigenvectors();
    order = by_magnitude(theta);

    bool all = true;
    for (int i = 0; i < M; ++i) {
      const int c = order[i];
      const double r = std::abs(beta * Y(m - 1, c));
      if (r > options.tol * std::max(std::abs(theta[c]), kEps23)) {
        all = false;
        break;
      }
    }
    if (all || out.restarts >= options.max_restarts) {
      out.converged = all;
      break;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    k = std::min<Eigen::Index>(M + (m - M) / 2, m - 1);
    MatrixXd Yk(m, k);
    VectorXd kept(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      Yk.col(i) = Y.col(order[i]);
      kept[i] = theta[order[i]];
    }
    V.leftCols(k) = V.leftCols(m) * Yk;
    V.col(k) = V.col(m);
    T.setZero();
    T.diagonal().head(k) = kept;
    expected.setZero();
    expected.head(k) = beta * Yk.row(m - 1).transpose();
    ++out.restarts;
  }

  out.matvec_count = A.count();
  for (int i = 0; i < M; ++i) {
    const int c = order[i];
    out.eigenvalues.push_back(theta[c]);
    out.residuals.push_back(std::abs(beta * Y(m - 1, c)) / std::max(std::abs(theta[c]), kEps23));
    if (options.want_vectors) out.eigenvectors.push_back(to_noise(op, V.leftCols(m) * Y.col(c)));
  }
  return out;
}

SpectrumResult dense_spectrum(const OperatorHandle& op, std::size_t cap) {
  const std::size_t N = op.size();
  if (N > cap)
    throw Error(ErrorCode::InvalidArgument, "dense spectrum refused: dimension " + std::to_string(N) +
                                                " exceeds the cap " + std::to_string(cap) +
                                                "; use leading_eigenvalues for large grids");
  const auto n = static_cast<Eigen::Index>(N);
  Applier A(op);
  MatrixXd Mat(n, n);
  VectorXd e = VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    Mat.col(j) = A(e);
    e[j] = 0.0;
  }
  SpectrumResult out;
  const double big = Mat.cwiseAbs().maxCoeff();
  out.asymmetry = big > 0.0 ? (Mat - Mat.transpose()).cwiseAbs().maxCoeff() / big : 0.0;
  MatrixXd S = 0.5 * (Mat + Mat.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
  const VectorXd& mu = eig.eigenvalues();
  const MatrixXd R = S * eig.eigenvectors() - eig.eigenvectors() * mu.asDiagonal();
  for (int c : by_magnitude(mu)) {
    out.eigenvalues.push_back(mu[c]);
    out.residuals.push_back(R.col(c).norm() / std::max(std::abs(mu[c]), kEps23));
  }
  out.requested = static_cast<int>(n);
  out.matvec_count = A.count();
  out.converged = true;
  return out;
}

std::vector<MatvecRow> matvec_scaling_report(const std::function<OperatorHandle(const TimeGrid&)>& factory,
                                             const std::vector<TimeGrid>& grids, int M,
                                             const LanczosOptions& options) {
  if (grids.empty()) throw Error(ErrorCode::InvalidArgument, "matvec scaling report needs at least one grid");
  std::vector<MatvecRow> rows;
  for (const auto& g : grids) {
    auto r = leading_eigenvalues(factory(g), M, options);
    rows.push_back({g.steps(), r.matvec_count, r.converged});
  }
  return rows;
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& spectrum) {
  const auto prec = out.precision(17);
  out << "index,eigenvalue,residual\n";
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i)
    out << i << ',' << spectrum.eigenvalues[i] << ',' << (i < spectrum.residuals.size() ? spectrum.residuals[i] : 0.0)
        << '\n';
  out.precision(prec);
}

}  // namespace sorm
