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

#include "sorm/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string_view>
#include <thread>

#include "sorm/errors.hpp"
#include "sorm/prefactor.hpp"
#include "sorm/propagation.hpp"

namespace sorm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

}  // namespace

Interval wilson_interval(long successes, long n, double zq) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "Wilson interval needs n >= 1");
  if (successes < 0 || successes > n) throw Error(ErrorCode::InvalidArgument, "successes out of range");
  const double nn = static_cast<double>(n);
  const double p = successes / nn;
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = zq * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

int effective_workers(int requested) {
  if (const char* env = std::getenv("RARE_SORM_DETERMINISTIC"); env && std::string_view(env) == "1") return 1;
  if (requested <= 0) return std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

std::vector<double> sample_final_values(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                        double epsilon, const McConfig& config) {
  if (config.n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be at least 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const long n = config.n_samples;
  std::vector<double> values(n);
  const int workers = static_cast<int>(std::min<long>(effective_workers(config.workers), n));
  std::atomic<bool> abort{false};

  auto run = [&](long begin, long end) {
    for (long i = begin; i < end && !abort.load(std::memory_order_relaxed); ++i) {
      std::mt19937_64 rng(stream_seed(config.seed, static_cast<std::uint64_t>(i)));
      values[i] = sample_final_value(system, obs, grid, epsilon, rng);
      if (config.abort_on_divergence && std::isnan(values[i])) abort = true;
    }
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, n * w / workers, n * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }
  if (abort) throw Error(ErrorCode::Sampling, "sample path diverged (abort on divergence requested)");
  return values;
}

TailSample tail_from_samples(const std::vector<double>& values, double epsilon, double z, bool abort_on_divergence) {
  TailSample t;
  t.epsilon = epsilon;
  t.z = z;
  t.n_samples = static_cast<long>(values.size());
  for (double v : values) {
    if (std::isnan(v)) {
      ++t.n_diverged;
    } else if (v >= z) {
      ++t.n_success;
    }
  }
  if (t.n_diverged > 0 && abort_on_divergence)
    throw Error(ErrorCode::Sampling, std::to_string(t.n_diverged) + " sample paths diverged");
  t.n_effective = t.n_samples - t.n_diverged;
  if (t.n_effective == 0) throw Error(ErrorCode::Sampling, "all sample paths diverged");
  t.p_hat = static_cast<double>(t.n_success) / t.n_effective;
  t.wilson95 = wilson_interval(t.n_success, t.n_effective, kZ95);
  t.wilson99 = wilson_interval(t.n_success, t.n_effective, kZ99);
  return t;
}

TailSample estimate_tail(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                         double z, const McConfig& config) {
  return tail_from_samples(sample_final_values(system, obs, grid, epsilon, config), epsilon, z,
                           config.abort_on_divergence);
}

std::vector<CompareRow> compare_sweep(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                      const std::vector<double>& epsilons, const std::vector<SormPoint>& points,
                                      const McConfig& config) {
  if (epsilons.empty() || points.empty()) throw Error(ErrorCode::InvalidArgument, "compare_sweep needs epsilons and z values");
  std::vector<CompareRow> rows;
  for (double eps : epsilons) {
    const auto values = sample_final_values(system, obs, grid, eps, config);
    const std::size_t first = rows.size();
    for (const auto& pt : points) {
      CompareRow r;
      r.mc = tail_from_samples(values, eps, pt.z, config.abort_on_divergence);
      if (pt.valid) {
        r.sorm_estimate = tail_probability(eps, pt.rate, pt.C).probability;
      } else {
        r.ok = false;
        r.sorm_estimate = std::numeric_limits<double>::quiet_NaN();
        r.message = "no valid prefactor for this z";
      }
      rows.push_back(std::move(r));
    }
    // Prefactor-free fit, matched at the largest z with successes.
    std::size_t anchor = rows.size();
    for (std::size_t i = first; i < rows.size(); ++i)
      if (rows[i].mc.n_success > 0 && (anchor == rows.size() || rows[i].mc.z > rows[anchor].mc.z)) anchor = i;
    for (std::size_t i = first; i < rows.size(); ++i) {
      if (anchor == rows.size()) {
        rows[i].fit_estimate = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double ia = points[anchor - first].rate;
      const double ii = points[i - first].rate;
      rows[i].fit_estimate = rows[anchor].mc.p_hat * std::exp(-(ii - ia) / eps);
    }
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  const auto prec = out.precision(17);
  out << "epsilon,z,p_hat,wilson95_lo,wilson95_hi,wilson99_lo,wilson99_hi,sorm_estimate,n_samples,n_diverged\n";
  for (const auto& r : rows) {
    const auto& m = r.mc;
    out << m.epsilon << ',' << m.z << ',' << m.p_hat << ',' << m.wilson95.lo << ',' << m.wilson95.hi << ','
        << m.wilson99.lo << ',' << m.wilson99.hi << ',' << r.sorm_estimate << ',' << m.n_samples << ','
        << m.n_diverged << '\n';
  }
  out.precision(prec);
}

}  // namespace sorm
