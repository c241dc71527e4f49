/*
 * Copyright 2026 The driftdiffuse Authors
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

// Statistical checks of the field synthesis: divergence, radius law,
// direction isotropy and OU autocovariance.

#include <cstdint>
#include <string>
#include <vector>

#include "driftdiffuse/ensemble.hpp"

namespace driftdiffuse {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

/// sup |F_emp(r) - (r/K)^{2-2 alpha}| over the sorted radii.
double ks_radius_statistic(std::vector<double> radii, double cutoff, double alpha);

/// 1% critical value of the KS distance for n samples, 1.63 / sqrt(n).
double ks_critical_1pct(std::size_t n);

/// Pearson chi-square of `values` against the uniform law on [lo, hi).
double uniform_chi_square(const std::vector<double>& values, double lo, double hi, int bins);

/// 99% quantile of chi-square with 35 degrees of freedom (36 bins).
inline constexpr double kChiSquare35At1pct = 57.34;

/// Lag-l autocovariance over `chains` independent stationary OU chains,
/// l = 0..max_lag: mean over chains of xi(0) xi(l).
std::vector<double> ou_autocovariance(double theta, double dt, std::size_t chains, int max_lag,
                                      std::uint64_t seed, const simd::KernelTable& kernels);

struct FieldCheckOptions {
  int divergence_points = 100;
  double fd_step = 1e-5;
  double divergence_tol = 1e-6;
  std::size_t spectrum_samples = 100000;
  std::size_t ou_chains = 100000;
  int ou_max_lag = 5;
  int isotropy_bins = 36;
  /// Adds a component along k to every amplitude (negative control).
  bool inject_nontransverse = false;
};

/// All checks on the field of path 0 plus dedicated large samples drawn
/// from the configured spectrum and OU parameters.
std::vector<CheckResult> field_check(const ExperimentConfig& cfg, const FieldCheckOptions& opt = {});

}  // namespace driftdiffuse
