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

#include "sorm/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace sorm {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b, double w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return w * s;
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

double cubic_minimizer(const Trial& a, const Trial& b) {
  const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = std::numeric_limits<double>::quiet_NaN();
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  }
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (lo + hi);
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& obj, const std::vector<double>& x, const std::vector<double>& d, double f0,
             double slope0, double weight, const LbfgsOptions& opt)
      : obj_(obj), x_(x), d_(d), f0_(f0), slope0_(slope0), w_(weight), opt_(opt) {}

  // Returns true on a strong-Wolfe point stored in `best`.
  bool run(double alpha, Trial& best) {
    Trial prev{0.0, f0_, slope0_, {}, {}};
    for (int i = 0; budget_left(); ++i) {
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, best);
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
        best = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, best);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return fallback(best);
  }

  int evaluations() const noexcept { return evals_; }

 private:
  bool budget_left() const { return evals_ < opt_.max_linesearch; }

  Trial eval(double alpha) {
    ++evals_;
    Trial t;
    t.alpha = alpha;
    t.x = x_;
    for (std::size_t i = 0; i < t.x.size(); ++i) t.x[i] += alpha * d_[i];
    t.g.assign(t.x.size(), 0.0);
    t.f = obj_(t.x, t.g);
    t.slope = std::isfinite(t.f) ? dot(t.g, d_, w_) : 0.0;
    if (std::isfinite(t.f) && t.f <= f0_ + opt_.c1 * alpha * slope0_ && (!have_sufficient_ || t.f < sufficient_.f)) {
      sufficient_ = t;
      have_sufficient_ = true;
    }
    return t;
  }

  bool zoom(Trial lo, Trial hi, Trial& best) {
    while (budget_left()) {
      const double alpha = cubic_minimizer(lo, hi);
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        hi = std::move(cur);
        hi.f = std::numeric_limits<double>::infinity();
        hi.slope = 0.0;
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * alpha * slope0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
          best = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    return fallback(best);
  }

  // Accept the best sufficient-decrease point seen if the curvature condition never held.
  bool fallback(Trial& best) {
    if (!have_sufficient_) return false;
    best = sufficient_;
    return true;
  }

  const Objective& obj_;
  const std::vector<double>& x_;
  const std::vector<double>& d_;
  double f0_, slope0_, w_;
  const LbfgsOptions& opt_;
  int evals_ = 0;
  Trial sufficient_;
  bool have_sufficient_ = false;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, double weight,
                           const LbfgsOptions& options) {
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(res.x.size(), 0.0);
  res.value = objective(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) {
    res.message = "objective is not finite at the starting point";
    return res;
  }

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(res.x.size()), alpha_buf;

  for (res.iterations = 0;; ++res.iterations) {
    res.grad_norm = std::sqrt(dot(g, g, weight));
    const double tol = options.relative_tol ? options.grad_tol * std::sqrt(dot(res.x, res.x, weight)) : options.grad_tol;
    if (res.grad_norm <= tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }
    if (res.iterations >= options.max_iter) {
      res.message = "iteration limit reached";
      return res;
    }

    // Two-loop recursion: d = -H g.
    d = g;
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t j = m; j-- > 0;) {
      alpha_buf[j] = rho_hist[j] * dot(s_hist[j], d, weight);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha_buf[j] * y_hist[j][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back(), weight) / dot(y_hist.back(), y_hist.back(), weight);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], d, weight);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha_buf[j] - beta) * s_hist[j][i];
    }
    for (double& v : d) v = -v;

    double slope = dot(g, d, weight);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
      slope = -res.grad_norm * res.grad_norm;
    }
    const double alpha0 = m == 0 ? std::min(1.0, 1.0 / res.grad_norm) : 1.0;

    LineSearch ls(objective, res.x, d, res.value, slope, weight, options);
    Trial next;
    const bool ok = ls.run(alpha0, next);
    res.evaluations += ls.evaluations();
    if (!ok) {
      res.message = "line search failed to find a point with sufficient decrease";
      return res;
    }

    std::vector<double> s(res.x.size()), y(res.x.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next.x[i] - res.x[i];
      y[i] = next.g[i] - g[i];
    }
    const double sy = dot(s, y, weight);
    if (sy > 1e-14 * std::sqrt(dot(s, s, weight) * dot(y, y, weight))) {
      if (static_cast<int>(s_hist.size()) == options.memory) {
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    res.x = std::move(next.x);
    g = std::move(next.g);
    res.value = next.f;
  }
}

}  // namespace sorm
