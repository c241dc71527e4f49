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

#include "driftdiffuse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace driftdiffuse {

double ks_radius_statistic(std::vector<double> radii, double cutoff, double alpha) {
  std::sort(radii.begin(), radii.end());
  const double n = static_cast<double>(radii.size());
  double d = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double f = radius_cdf(radii[i], cutoff, alpha);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double uniform_chi_square(const std::vector<double>& values, double lo, double hi, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double expected = static_cast<double>(values.size()) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  return chi2;
}

std::vector<double> ou_autocovariance(double theta, double dt, std::size_t chains, int max_lag,
                                      std::uint64_t seed, const simd::KernelTable& kernels) {
  RandomStream init(derive_seed(seed, 0, StreamLabel::ou_init), kernels);
  RandomStream noise(derive_seed(seed, 0, StreamLabel::ou_noise), kernels);
  OuAmplitudeState st = init_ou(chains, 1, theta, dt, init);
  const std::vector<double> x0 = st.xi;
  std::vector<double> out;
  for (int lag = 0; lag <= max_lag; ++lag) {
    if (lag > 0) advance_ou(st, noise, kernels);
    double s = 0.0;
    for (std::size_t c = 0; c < chains; ++c) s += x0[c] * st.xi[c];
    out.push_back(s / static_cast<double>(chains));
  }
  return out;
}

namespace {

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(6);
  o << x;
  return o.str();
}

template <int D>
std::vector<CheckResult> field_check_impl(const ExperimentConfig& cfg, const FieldCheckOptions& opt) {
  const auto& kern = simd::kernels(cfg.kernel);
  std::vector<CheckResult> out;

  // Divergence and transversality on the path-0 field.
  PathStreams streams(cfg.seed, 0, kern);
  const SpectralField<D> field =
      sample_field<D>(cfg.spectral(), cfg.theta, cfg.dt / cfg.noise_substeps, streams.modes, streams.ou_init, kern);
  ModeSum<D> sum = field.mode_sum();
  if (opt.inject_nontransverse) {
    for (std::size_t m = 0; m < sum.size(); ++m) {
      const Vec<D> k = sum.wavevector(m);
      sum.set_mode(m, k, sum.cos_amplitude(m) + (0.5 / norm(k)) * k, sum.sin_amplitude(m));
    }
  }
  RandomStream probe(derive_seed(cfg.seed, 0, StreamLabel::probe), kern);
  std::vector<Vec<D>> points(static_cast<std::size_t>(opt.divergence_points));
  for (auto& p : points)
    for (auto& c : p) c = 2.0 * std::numbers::pi * probe.uniform();
  const double div = check_divergence<D>(sum, points, opt.fd_step);
  out.push_back({"divergence", div, opt.divergence_tol, div <= opt.divergence_tol,
                 "max |FD div b| / |b| over " + std::to_string(points.size()) + " points, h = " + fmt(opt.fd_step)});

  double worst = 0.0;
  for (const auto& x : points)
    for (std::size_t m = 0; m < sum.size(); ++m) {
      const Vec<D> k = sum.wavevector(m);
      const Vec<D> bm = sum.mode_velocity(m, x);
      // Scale by the amplitudes: b_m(x) itself may cancel to ~0.
      const double scale = norm(k) * (norm(sum.cos_amplitude(m)) + norm(sum.sin_amplitude(m)));
      worst = std::max(worst, std::abs(dot(k, bm)) / (scale + 1e-300));
    }
  out.push_back({"transversality", worst, 1e-12, worst <= 1e-12, "max |k . b_m(x)| / (|k| (|u_m| + |v_m|))"});

  // Spectrum and isotropy from a dedicated large mode sample.
  SpectralParams big = cfg.spectral();
  big.modes = static_cast<int>(opt.spectrum_samples);
  RandomStream spec_rng(derive_seed(cfg.seed, 1, StreamLabel::modes), kern);
  const SpectralModeSet<D> set = sample_modes<D>(big, spec_rng);
  std::vector<double> radii, dirs;
  for (const auto& k : set.wavevectors) {
    radii.push_back(norm(k));
    if constexpr (D == 2)
      dirs.push_back(std::atan2(k[1], k[0]) + std::numbers::pi);
    else
      dirs.push_back(k[2] / norm(k));
  }
  const double ks = ks_radius_statistic(radii, cfg.cutoff_k, cfg.alpha);
  const double ks_crit = ks_critical_1pct(radii.size());
  out.push_back({"spectrum", ks, ks_crit, ks < ks_crit,
                 "KS distance of |k| against (r/K)^(2-2 alpha), " + std::to_string(radii.size()) + " samples"});

  const double chi2 = D == 2 ? uniform_chi_square(dirs, 0.0, 2.0 * std::numbers::pi, opt.isotropy_bins)
                             : uniform_chi_square(dirs, -1.0, 1.0, opt.isotropy_bins);
  const double chi_crit = opt.isotropy_bins == 36 ? kChiSquare35At1pct : 0.0;
  out.push_back({"isotropy", chi2, chi_crit, chi_crit > 0.0 && chi2 < chi_crit,
                 std::string(D == 2 ? "angle" : "k_z / |k|") + " chi-square on " + std::to_string(opt.isotropy_bins) +
                     " bins"});

  // OU autocovariance against exp(-theta dt l).
  const double ou_dt = cfg.dt / cfg.noise_substeps;
  const auto cov = ou_autocovariance(cfg.theta, ou_dt, opt.ou_chains, opt.ou_max_lag, cfg.seed, kern);
  double ou_dev = 0.0;
  for (int l = 0; l <= opt.ou_max_lag; ++l)
    ou_dev = std::max(ou_dev, std::abs(cov[static_cast<std::size_t>(l)] - std::exp(-cfg.theta * ou_dt * l)));
  const double ou_tol = 3.0 / std::sqrt(static_cast<double>(opt.ou_chains));
  out.push_back({"ou_covariance", ou_dev, ou_tol, ou_dev <= ou_tol,
                 "max over lags 0.." + std::to_string(opt.ou_max_lag) + " of |C(l) - exp(-theta dt l)|, " +
                     std::to_string(opt.ou_chains) + " chains"});
  return out;
}

}  // namespace

std::vector<CheckResult> field_check(const ExperimentConfig& cfg, const FieldCheckOptions& opt) {
  cfg.validate();
  if (cfg.field != FieldKind::spectral) throw ConfigError("field: fieldcheck needs field = spectral");
  return cfg.dim == 2 ? field_check_impl<2>(cfg, opt) : field_check_impl<3>(cfg, opt);
}

}  // namespace driftdiffuse
