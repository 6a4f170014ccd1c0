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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sorm/model.hpp"

namespace sorm {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

/// Wilson score interval for k successes out of n at normal quantile zq.
Interval wilson_interval(long successes, long n, double zq);

struct McConfig {
  long n_samples = 100000;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency. RARE_SORM_DETERMINISTIC=1 forces 1.
  int workers = 1;
  /// Throw on the first diverged sample instead of excluding it.
  bool abort_on_divergence = false;
};

struct TailSample {
  double epsilon = 0.0;
  double z = 0.0;
  double p_hat = 0.0;
  Interval wilson95;
  Interval wilson99;
  long n_success = 0;
  long n_samples = 0;
  long n_diverged = 0;
  /// Samples entering the denominator (n_samples - n_diverged).
  long n_effective = 0;
};

/// Workers actually used for a request (environment override applied).
int effective_workers(int requested);

/// Final observable values of n_samples Euler-Maruyama paths; NaN marks a diverged
/// path. Sample i always uses the same random stream, whatever the worker count.
std::vector<double> sample_final_values(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                        double epsilon, const McConfig& config);

/// Counts f(X_T) >= z. Diverged samples are excluded from the denominator.
TailSample tail_from_samples(const std::vector<double>& values, double epsilon, double z, bool abort_on_divergence);

TailSample estimate_tail(const SdeSystem& system, const Observable& obs, const TimeGrid& grid, double epsilon,
                         double z, const McConfig& config);

/// Asymptotic inputs for one threshold.
struct SormPoint {
  double z = 0.0;
  double rate = 0.0;
  double C = 0.0;
  bool valid = false;
};

struct CompareRow {
  TailSample mc;
  double sorm_estimate = 0.0;
  /// const * exp(-I / eps) with const matched to MC at the largest z that has successes.
  double fit_estimate = 0.0;
  bool ok = true;
  std::string message;
};

std::vector<CompareRow> compare_sweep(const SdeSystem& system, const Observable& obs, const TimeGrid& grid,
                                      const std::vector<double>& epsilons, const std::vector<SormPoint>& points,
                                      const McConfig& config);

/// epsilon,z,p_hat,wilson95_lo,wilson95_hi,wilson99_lo,wilson99_hi,sorm_estimate,n_samples,n_diverged
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

}  // namespace sorm
