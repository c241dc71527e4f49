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

// Post-processing of ensembles: effective-diffusivity curves, log-log slope
// fits, the paired convergence study, the mixing-decay diagnostic and the
// residual-diffusivity sweep.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftdiffuse/ensemble.hpp"

namespace driftdiffuse {

enum class EstimatorVariant { raw, corrected };

EstimatorVariant parse_estimator_variant(std::string_view text);
std::string_view to_string(EstimatorVariant v);

/// D^E(t_k) = E[X (x) X] / (2 t_k), with X replaced by X - (t_k/dt) Bbar for
/// the corrected variant.
struct DiffusivityCurve {
  EstimatorVariant variant = EstimatorVariant::raw;
  int dim = 0;
  std::vector<double> times;
  std::vector<std::int64_t> counts;
  /// d*d entries per record, row-major, symmetric.
  std::vector<double> d;
  /// Standard error of each diagonal entry, d per record.
  std::vector<double> se;

  std::size_t records() const { return times.size(); }
  double entry(std::size_t k, int i, int j) const { return d[k * dim * dim + i * dim + j]; }
  double stderr_of(std::size_t k, int i) const { return se[k * dim + i]; }
};

/// Throws NumericalError when any record holds fewer than two paths.
DiffusivityCurve effective_diffusivity(const MomentAccumulator& acc,
                                       EstimatorVariant variant = EstimatorVariant::raw);

/// Transformed data: (log dt, log error) for slope fits, (t, log variance)
/// for decay fits.
struct SlopeFit {
  std::vector<double> log_x;
  std::vector<double> log_y;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares of log y on log x. Needs >= 2 points, all positive,
/// and at least two distinct abscissae.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceConfig {
  /// Physical parameters, seed, horizon and reference scheme; its dt is unused.
  ExperimentConfig base;
  std::vector<double> dt_list;
  /// Schemes compared at every dt. Defaults to the base scheme only.
  std::vector<SchemeKind> schemes;
  /// Reference step; 0 selects min(dt_list) / 4.
  double dt_ref = 0.0;

  void validate() const;
  double resolved_dt_ref() const;
};

struct ConvergencePoint {
  SchemeKind scheme = SchemeKind::midpoint2d;
  double dt = 0.0;
  double d11 = 0.0;
  double abs_error = 0.0;
  /// Standard error of the paired difference D11(dt) - D11(ref).
  double std_err = 0.0;
  bool included_in_fit = false;
};

struct ConvergenceResult {
  double dt_ref = 0.0;
  double d11_ref = 0.0;
  double d11_ref_se = 0.0;
  std::int64_t count = 0;
  std::int64_t failed = 0;
  std::vector<ConvergencePoint> points;
  /// One fit per scheme, in `schemes` order; empty when fewer than two points
  /// survive the noise filter.
  std::vector<std::optional<SlopeFit>> fits;
  std::vector<std::string> warnings;

  const ConvergencePoint& point(SchemeKind scheme, double dt) const;
  std::optional<SlopeFit> fit(SchemeKind scheme) const;
};

/// Every scheme/dt arm and the reference run on each path together, sharing
/// one field and one noise realization on the reference grid. Errors are
/// paired differences at the horizon; arms whose error is below 2 standard
/// errors are flagged as noise-dominated and left out of the fit.
ConvergenceResult convergence_study(const ConvergenceConfig& cfg, int threads = 0);

// ---------------------------------------------------------------------------
// Mixing decay

struct DecayConfig {
  /// Field and integration parameters; horizon and paths are unused.
  ExperimentConfig base;
  int n_states = 100;
  int n_paths = 2000;
  int horizon_steps = 60;

  void validate() const;
};

struct DecayCurve {
  std::vector<std::int64_t> n;
  std::vector<double> t;
  /// Across-state sample variance of the inner mean of b_1(t_n, X_n).
  std::vector<double> variance;
  /// Estimation floor 1 / n_paths.
  double floor = 0.0;
  /// Rate of the variance, -d log Var / dt, over the fit window.
  std::optional<double> variance_rate;
  /// Half the variance rate: the decay rate of the norm itself.
  std::optional<double> amplitude_rate;
  std::optional<SlopeFit> fit;
  /// Steps used in the fit: 1 .. fit_end - 1.
  std::int64_t fit_end = 0;
};

/// Fixed initial states (modes + OU values), each continued along n_paths
/// independent OU and Brownian paths.
DecayCurve decay_diagnostic(const DecayConfig& cfg, int threads = 0);

/// Fit of log variance against t from n = 1 while variance > 10 floor.
void fit_decay_rate(DecayCurve& curve);

// ---------------------------------------------------------------------------
// Residual diffusivity

struct ResidualRow {
  double sigma = 0.0;
  double kappa = 0.0;
  double d11 = 0.0;
  double se = 0.0;
  std::int64_t count = 0;
  std::int64_t failed = 0;
};

struct ResidualResult {
  std::vector<ResidualRow> rows;
  /// Mean of the two smallest-kappa estimates.
  double plateau = 0.0;
  /// |a - b| / max(|a|, |b|) over the two smallest-kappa estimates.
  double plateau_gap = 0.0;
};

/// One ensemble per sigma (descending), all sharing the master seed.
ResidualResult residual_sweep(const ExperimentConfig& base, std::span<const double> sigmas, int threads = 0);

/// Plateau and gap from rows already sorted by descending sigma.
void summarize_plateau(ResidualResult& result);

}  // namespace driftdiffuse
