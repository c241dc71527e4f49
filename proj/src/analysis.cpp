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

#include "driftdiffuse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace driftdiffuse {

EstimatorVariant parse_estimator_variant(std::string_view text) {
  if (text == "raw") return EstimatorVariant::raw;
  if (text == "corrected") return EstimatorVariant::corrected;
  throw ConfigError("estimator: expected raw|corrected, got '" + std::string(text) + "'");
}

std::string_view to_string(EstimatorVariant v) { return v == EstimatorVariant::raw ? "raw" : "corrected"; }

DiffusivityCurve effective_diffusivity(const MomentAccumulator& acc, EstimatorVariant variant) {
  const int dim = acc.dim();
  DiffusivityCurve out;
  out.variant = variant;
  out.dim = dim;
  std::vector<double> bbar(static_cast<std::size_t>(dim), 0.0);
  if (variant == EstimatorVariant::corrected) bbar = estimate_mean_drift(acc);

  for (std::size_t k = 0; k < acc.records(); ++k) {
    const std::int64_t count = acc.count(k);
    if (count < 2)
      throw NumericalError("effective diffusivity: record " + std::to_string(k) + " holds " +
                           std::to_string(count) + " path(s), need at least 2");
    const double n = static_cast<double>(count);
    const double t = acc.time(k);
    const double steps = static_cast<double>(acc.record_steps()[k]);
    std::vector<double> c(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) c[i] = steps * bbar[i];

    out.times.push_back(t);
    out.counts.push_back(count);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double sxx = acc.sum_xx(k, i, j);
        if (variant == EstimatorVariant::corrected)
          sxx = sxx - c[i] * acc.sum_x(k, j) - c[j] * acc.sum_x(k, i) + n * c[i] * c[j];
        out.d.push_back((sxx / n) / (2.0 * t));
      }
    for (int i = 0; i < dim; ++i) {
      double s2 = acc.sum_xx(k, i, i);
      double s4 = acc.sum_x4(k, i);
      if (variant == EstimatorVariant::corrected) {
        const double ci = c[i];
        const double s1 = acc.sum_x(k, i);
        const double s3 = acc.sum_x3(k, i);
        const double s2raw = s2;
        s2 = s2raw - 2.0 * ci * s1 + n * ci * ci;
        s4 = s4 - 4.0 * ci * s3 + 6.0 * ci * ci * s2raw - 4.0 * ci * ci * ci * s1 + n * ci * ci * ci * ci;
      }
      const double var = std::max(0.0, (s4 - s2 * s2 / n) / (n - 1.0));
      out.se.push_back(std::sqrt(var / n) / (2.0 * t));
    }
  }
  return out;
}

namespace {

// Least squares of y on x; both already transformed.
SlopeFit fit_line(std::vector<double> xs, std::vector<double> ys) {
  SlopeFit fit;
  fit.log_x = std::move(xs);
  fit.log_y = std::move(ys);
  const std::size_t n = fit.log_x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += fit.log_x[i];
    my += fit.log_y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = fit.log_x[i] - mx;
    sxx += dx * dx;
    sxy += dx * (fit.log_y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("slope fit: abscissae must not all coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fit.log_y[i] - (fit.intercept + fit.slope * fit.log_x[i]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
  return fit;
}

}  // namespace

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("slope fit: x and y differ in length");
  if (x.size() < 2) throw ConfigError("slope fit: need at least 2 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ConfigError("slope fit: inputs must be positive and finite");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(std::move(lx), std::move(ly));
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t integer_ratio(double num, double den, const std::string& what) {
  const double r = num / den;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
    throw ConfigError(what + " (ratio " + std::to_string(r) + ")");
  return static_cast<std::int64_t>(n);
}

}  // namespace

double ConvergenceConfig::resolved_dt_ref() const {
  if (dt_ref > 0.0) return dt_ref;
  if (dt_list.empty()) return 0.0;
  return *std::min_element(dt_list.begin(), dt_list.end()) / 4.0;
}

void ConvergenceConfig::validate() const {
  if (dt_list.size() < 3) throw ConfigError("dt_list: need at least 3 step sizes");
  for (double dt : dt_list)
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt_list: step sizes must be positive");
  const double ref = resolved_dt_ref();
  const double dmin = *std::min_element(dt_list.begin(), dt_list.end());
  if (!(ref > 0.0) || ref > dmin / 4.0 * (1.0 + 1e-12))
    throw ConfigError("dt_ref: must satisfy 0 < dt_ref <= min(dt_list) / 4");
  ExperimentConfig probe = base;
  probe.dt = ref;
  probe.noise_substeps = 1;
  probe.validate();
  for (SchemeKind s : schemes.empty() ? std::vector<SchemeKind>{base.scheme.kind} : schemes) {
    SchemeConfig sc = base.scheme;
    sc.kind = s;
    sc.validate(base.dim);
  }
  for (double dt : dt_list) {
    integer_ratio(dt, ref, "dt_list: " + std::to_string(dt) + " is not an integer multiple of dt_ref");
    integer_ratio(base.horizon, dt, "horizon: not an integer multiple of dt " + std::to_string(dt));
  }
}

const ConvergencePoint& ConvergenceResult::point(SchemeKind scheme, double dt) const {
  for (const auto& p : points)
    if (p.scheme == scheme && p.dt == dt) return p;
  throw ConfigError("convergence: no arm for scheme " + std::string(to_string(scheme)) + " at dt " +
                    std::to_string(dt));
}

std::optional<SlopeFit> ConvergenceResult::fit(SchemeKind scheme) const {
  std::vector<SchemeKind> order;
  for (const auto& p : points)
    if (std::find(order.begin(), order.end(), p.scheme) == order.end()) order.push_back(p.scheme);
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == scheme) return fits[i];
  return std::nullopt;
}

namespace {

struct Arm {
  SchemeConfig scheme;
  double dt = 0.0;
  std::int64_t ratio = 1;   // fine steps per arm step
  std::int64_t steps = 0;   // arm steps to the horizon
};

// Per arm: sum X_1(T)^2, sum X_1(T)^4, sum d, sum d^2 with
// d = X_1(T)^2 / (2T) - (same for the reference arm).
struct PairedSums {
  std::vector<CompensatedSum> s;
  std::int64_t count = 0;
  std::int64_t failed = 0;

  explicit PairedSums(std::size_t arms = 0) : s(4 * arms) {}
  void merge(const PairedSums& o) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i].merge(o.s[i]);
    count += o.count;
    failed += o.failed;
  }
};

template <int D, class Field>
bool run_joint_path(Field& field, const ExperimentConfig& base, std::span<const Arm> arms, std::int64_t fine_steps,
                    RandomStream& ou_noise, RandomStream& kicks, std::vector<Vec<D>>& x) {
  std::vector<Vec<D>> pending(arms.size());
  x.assign(arms.size(), Vec<D>{});
  try {
    for (std::int64_t j = 0; j < fine_steps; ++j) {
      for (std::size_t a = 0; a < arms.size(); ++a)
        if (j % arms[a].ratio == 0) {
          x[a] = deterministic_step<D>(field, x[a], arms[a].dt, arms[a].scheme).after;
          pending[a] = {};
        }
      Vec<D> z;
      for (int i = 0; i < D; ++i) z[i] = kicks.normal();
      for (std::size_t a = 0; a < arms.size(); ++a) {
        for (int i = 0; i < D; ++i) pending[a][i] += z[i];
        if ((j + 1) % arms[a].ratio == 0) {
          const double sub_sd = std::sqrt(arms[a].dt / static_cast<double>(arms[a].ratio));
          for (int i = 0; i < D; ++i) x[a][i] += base.sigma * sub_sd * pending[a][i];
        }
      }
      field.advance(ou_noise, 1);
    }
  } catch (const NonConvergence&) {
    return false;
  }
  return true;
}

template <int D, class Factory>
PairedSums run_joint(const ExperimentConfig& fine, std::span<const Arm> arms, std::int64_t fine_steps,
                     const Factory& factory, int threads) {
  const auto& kern = simd::kernels(fine.kernel);
  PairedSums total(arms.size());
  ordered_chunks(
      fine.paths, kChunkPaths, resolve_threads(threads),
      [&](std::int64_t begin, std::int64_t end) {
        PairedSums chunk(arms.size());
        std::vector<Vec<D>> x;
        for (std::int64_t p = begin; p < end; ++p) {
          PathStreams streams(fine.seed, static_cast<std::uint64_t>(p), kern);
          auto field = factory(static_cast<std::uint64_t>(p), streams.modes, streams.ou_init);
          if (!run_joint_path<D>(field, fine, arms, fine_steps, streams.ou_noise, streams.kicks, x)) {
            ++chunk.failed;
            continue;
          }
          const double t_ref = static_cast<double>(arms[0].steps) * arms[0].dt;
          const double q_ref = x[0][0] * x[0][0] / (2.0 * t_ref);
          for (std::size_t a = 0; a < arms.size(); ++a) {
            const double t = static_cast<double>(arms[a].steps) * arms[a].dt;
            const double q = x[a][0] * x[a][0] / (2.0 * t);
            const double d = q - q_ref;
            const double x2 = x[a][0] * x[a][0];
            chunk.s[4 * a].add(x2);
            chunk.s[4 * a + 1].add(x2 * x2);
            chunk.s[4 * a + 2].add(d);
            chunk.s[4 * a + 3].add(d * d);
          }
          ++chunk.count;
        }
        return chunk;
      },
      [&](PairedSums&& c) { total.merge(c); });
  return total;
}

}  // namespace

ConvergenceResult convergence_study(const ConvergenceConfig& cfg, int threads) {
  cfg.validate();
  const std::vector<SchemeKind> schemes =
      cfg.schemes.empty() ? std::vector<SchemeKind>{cfg.base.scheme.kind} : cfg.schemes;
  const double dt_ref = cfg.resolved_dt_ref();

  ExperimentConfig fine = cfg.base;
  fine.dt = dt_ref;
  fine.noise_substeps = 1;
  const std::int64_t fine_steps = fine.steps();

  std::vector<Arm> arms;
  arms.push_back({cfg.base.scheme, dt_ref, 1, fine_steps});
  for (SchemeKind s : schemes)
    for (double dt : cfg.dt_list) {
      Arm a;
      a.scheme = cfg.base.scheme;
      a.scheme.kind = s;
      a.dt = dt;
      a.ratio = integer_ratio(dt, dt_ref, "dt_list");
      a.steps = integer_ratio(cfg.base.horizon, dt, "horizon");
      arms.push_back(a);
    }

  PairedSums sums;
  if (fine.dim == 2) {
    if (fine.field == FieldKind::zero)
      sums = run_joint<2>(fine, arms, fine_steps, ZeroFactory<2>{}, threads);
    else
      sums = run_joint<2>(fine, arms, fine_steps, SpectralFactory<2>{fine, simd::kernels(fine.kernel)}, threads);
  } else {
    if (fine.field == FieldKind::zero)
      sums = run_joint<3>(fine, arms, fine_steps, ZeroFactory<3>{}, threads);
    else
      sums = run_joint<3>(fine, arms, fine_steps, SpectralFactory<3>{fine, simd::kernels(fine.kernel)}, threads);
  }

  ConvergenceResult out;
  out.dt_ref = dt_ref;
  out.count = sums.count;
  out.failed = sums.failed;
  const double failed_fraction = static_cast<double>(sums.failed) / static_cast<double>(fine.paths);
  if (failed_fraction > kMaxFailedFraction)
    throw NumericalError("convergence: " + std::to_string(sums.failed) + " of " + std::to_string(fine.paths) +
                         " paths failed (solver non-convergence); reduce the largest dt");
  if (sums.count < 2) throw NumericalError("convergence: fewer than 2 successful paths");
  const double n = static_cast<double>(sums.count);

  auto mean_se = [&](std::size_t s1, std::size_t s2) {
    const double m = sums.s[s1].value() / n;
    const double var = std::max(0.0, (sums.s[s2].value() - n * m * m) / (n - 1.0));
    return std::pair{m, std::sqrt(var / n)};
  };

  const double t_ref = static_cast<double>(arms[0].steps) * arms[0].dt;
  out.d11_ref = (sums.s[0].value() / n) / (2.0 * t_ref);
  out.d11_ref_se = mean_se(0, 1).second / (2.0 * t_ref);

  for (std::size_t a = 1; a < arms.size(); ++a) {
    ConvergencePoint p;
    p.scheme = arms[a].scheme.kind;
    p.dt = arms[a].dt;
    const double t = static_cast<double>(arms[a].steps) * arms[a].dt;
    p.d11 = (sums.s[4 * a].value() / n) / (2.0 * t);
    p.abs_error = std::abs(p.d11 - out.d11_ref);
    p.std_err = mean_se(4 * a + 2, 4 * a + 3).second;
    p.included_in_fit = p.abs_error > 0.0 && p.abs_error >= 2.0 * p.std_err;
    if (!p.included_in_fit) {
      std::ostringstream w;
      w << "MC-noise-dominated: " << to_string(p.scheme) << " dt=" << p.dt << " error " << p.abs_error
        << " < 2 SE (" << 2.0 * p.std_err << "); excluded from the fit";
      out.warnings.push_back(w.str());
    }
    out.points.push_back(p);
  }

  for (SchemeKind s : schemes) {
    std::vector<double> xs, ys;
    for (const auto& p : out.points)
      if (p.scheme == s && p.included_in_fit) {
        xs.push_back(p.dt);
        ys.push_back(p.abs_error);
      }
    const bool distinct = xs.size() >= 2 && *std::min_element(xs.begin(), xs.end()) < *std::max_element(xs.begin(), xs.end());
    if (distinct)
      out.fits.push_back(fit_loglog_slope(xs, ys));
    else
      out.fits.push_back(std::nullopt);
  }
  return out;
}

// ---------------------------------------------------------------------------

void DecayConfig::validate() const {
  if (n_states < 2) throw ConfigError("n_states: must be >= 2");
  if (n_paths < 2) throw ConfigError("n_paths: must be >= 2");
  if (horizon_steps < 1) throw ConfigError("horizon_steps: must be >= 1");
  base.validate();
}

void fit_decay_rate(DecayCurve& curve) {
  curve.variance_rate.reset();
  curve.amplitude_rate.reset();
  curve.fit.reset();
  std::vector<double> ts, vs;
  std::size_t k = 0;
  while (k < curve.n.size() && curve.n[k] < 1) ++k;
  for (; k < curve.n.size(); ++k) {
    if (!(curve.variance[k] > 10.0 * curve.floor)) break;
    ts.push_back(curve.t[k]);
    vs.push_back(curve.variance[k]);
  }
  curve.fit_end = k < curve.n.size() ? curve.n[k] : (curve.n.empty() ? 0 : curve.n.back() + 1);
  if (ts.size() < 2) return;
  std::vector<double> lv;
  for (double v : vs) lv.push_back(std::log(v));
  SlopeFit fit = fit_line(ts, std::move(lv));
  curve.variance_rate = -fit.slope;
  curve.amplitude_rate = -0.5 * fit.slope;
  curve.fit = std::move(fit);
}

namespace {

struct StateMeans {
  std::vector<double> mean;  // inner mean of b_1 per n
  std::int64_t failed = 0;
};

template <int D, class Field>
StateMeans run_decay_state(const Field& initial, const DecayConfig& cfg, std::uint64_t state_seed,
                           const simd::KernelTable& kern) {
  const int h = cfg.horizon_steps;
  const ExperimentConfig& base = cfg.base;
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(h) + 1);
  std::vector<double> trace(static_cast<std::size_t>(h) + 1);
  StateMeans out;
  std::int64_t ok = 0;
  for (int p = 0; p < cfg.n_paths; ++p) {
    RandomStream ou_noise(derive_seed(state_seed, static_cast<std::uint64_t>(p), StreamLabel::ou_noise), kern);
    RandomStream kicks(derive_seed(state_seed, static_cast<std::uint64_t>(p), StreamLabel::kicks), kern);
    Field field = initial;
    Vec<D> x{};
    trace[0] = field.velocity(x)[0];
    bool failed = false;
    try {
      for (int n = 1; n <= h; ++n) {
        x = step_full<D>(field, x, base.dt, base.sigma, base.scheme, kicks, base.noise_substeps).after;
        field.advance(ou_noise, base.noise_substeps);
        trace[static_cast<std::size_t>(n)] = field.velocity(x)[0];
      }
    } catch (const NonConvergence&) {
      failed = true;
    }
    if (failed) {
      ++out.failed;
      continue;
    }
    for (std::size_t n = 0; n < trace.size(); ++n) sums[n].add(trace[n]);
    ++ok;
  }
  out.mean.resize(sums.size(), 0.0);
  if (ok > 0)
    for (std::size_t n = 0; n < sums.size(); ++n) out.mean[n] = sums[n].value() / static_cast<double>(ok);
  return out;
}

template <int D>
std::vector<StateMeans> run_decay(const DecayConfig& cfg, int threads) {
  const ExperimentConfig& base = cfg.base;
  const auto& kern = simd::kernels(base.kernel);
  std::vector<StateMeans> states;
  ordered_chunks(
      cfg.n_states, 1, resolve_threads(threads),
      [&](std::int64_t begin, std::int64_t) {
        const std::uint64_t state_seed = derive_master(base.seed, static_cast<std::uint64_t>(begin));
        RandomStream modes(derive_seed(state_seed, 0, StreamLabel::modes), kern);
        RandomStream ou_init(derive_seed(state_seed, 0, StreamLabel::ou_init), kern);
        if (base.field == FieldKind::zero) {
          ZeroField<D> field;
          return run_decay_state<D>(field, cfg, state_seed, kern);
        }
        const SpectralField<D> field =
            sample_field<D>(base.spectral(), base.theta, base.dt / base.noise_substeps, modes, ou_init, kern);
        return run_decay_state<D>(field, cfg, state_seed, kern);
      },
      [&](StateMeans&& s) { states.push_back(std::move(s)); });
  return states;
}

}  // namespace

DecayCurve decay_diagnostic(const DecayConfig& cfg, int threads) {
  cfg.validate();
  const std::vector<StateMeans> states =
      cfg.base.dim == 2 ? run_decay<2>(cfg, threads) : run_decay<3>(cfg, threads);

  std::int64_t failed = 0;
  for (const auto& s : states) failed += s.failed;
  const double total = static_cast<double>(cfg.n_states) * static_cast<double>(cfg.n_paths);
  if (static_cast<double>(failed) / total > kMaxFailedFraction)
    throw NumericalError("decay: " + std::to_string(failed) + " inner paths failed (solver non-convergence); "
                         "reduce dt");

  DecayCurve curve;
  curve.floor = 1.0 / static_cast<double>(cfg.n_paths);
  const double ns = static_cast<double>(states.size());
  for (int n = 0; n <= cfg.horizon_steps; ++n) {
    CompensatedSum s1;
    for (const auto& s : states) s1.add(s.mean[static_cast<std::size_t>(n)]);
    const double m = s1.value() / ns;
    CompensatedSum s2;
    for (const auto& s : states) {
      const double d = s.mean[static_cast<std::size_t>(n)] - m;
      s2.add(d * d);
    }
    curve.n.push_back(n);
    curve.t.push_back(static_cast<double>(n) * cfg.base.dt);
    curve.variance.push_back(s2.value() / (ns - 1.0));
  }
  fit_decay_rate(curve);
  return curve;
}

// ---------------------------------------------------------------------------

void summarize_plateau(ResidualResult& result) {
  const auto& r = result.rows;
  if (r.size() < 2) {
    result.plateau = r.empty() ? 0.0 : r.back().d11;
    result.plateau_gap = 0.0;
    return;
  }
  const double a = r[r.size() - 1].d11;
  const double b = r[r.size() - 2].d11;
  result.plateau = 0.5 * (a + b);
  const double scale = std::max(std::abs(a), std::abs(b));
  result.plateau_gap = scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

ResidualResult residual_sweep(const ExperimentConfig& base, std::span<const double> sigmas, int threads) {
  if (sigmas.empty()) throw ConfigError("sigma_list: must not be empty");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (!(sigmas[i] < sigmas[i - 1])) throw ConfigError("sigma_list: must be strictly descending");
  ResidualResult out;
  for (double sigma : sigmas) {
    ExperimentConfig cfg = base;
    cfg.sigma = sigma;
    const EnsembleResult ens = run_ensemble(cfg, threads);
    const DiffusivityCurve curve = effective_diffusivity(
        ens.moments, cfg.drift_correct ? EstimatorVariant::corrected : EstimatorVariant::raw);
    const std::size_t k = curve.records() - 1;
    out.rows.push_back({sigma, 0.5 * sigma * sigma, curve.entry(k, 0, 0), curve.stderr_of(k, 0), curve.counts[k],
                        ens.moments.failed()});
  }
  summarize_plateau(out);
  return out;
}

}  // namespace driftdiffuse
