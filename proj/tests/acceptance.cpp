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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   driftdiffuse_acceptance                 all criteria
//   driftdiffuse_acceptance --criterion 5   a single criterion (repeatable)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftdiffuse/analysis.hpp"
#include "driftdiffuse/config.hpp"
#include "driftdiffuse/diagnostics.hpp"
#include "driftdiffuse/ensemble.hpp"
#include "driftdiffuse/integrators.hpp"
#include "driftdiffuse/spectral_field.hpp"

#ifndef DRIFTDIFFUSE_CLI
#define DRIFTDIFFUSE_CLI "driftdiffuse"
#endif

namespace fs = std::filesystem;
using namespace driftdiffuse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double final_d11(const EnsembleResult& res, double* se = nullptr) {
  const auto curve = effective_diffusivity(res.moments);
  const std::size_t k = curve.records() - 1;
  if (se) *se = curve.stderr_of(k, 0);
  return curve.entry(k, 0, 0);
}

// 1. b = 0: D11 = sigma^2 / 2 = 0.005.
Outcome pure_diffusion() {
  ExperimentConfig cfg;
  cfg.field = FieldKind::zero;
  cfg.sigma = 0.1;
  cfg.dt = 0.01;
  cfg.horizon = 10.0;
  cfg.paths = 100000;
  cfg.stride = 100;
  const auto t0 = std::chrono::steady_clock::now();
  double se = 0.0;
  const double d = final_d11(run_ensemble(cfg), &se);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = std::abs(d - 0.005) <= 3.0 * se && secs < 60.0;
  return {ok, fmt("D11 = %.6f +- %.6f (target 0.005 within 3 SE), %.1f s (limit 60 s)", d, se, secs)};
}

/// b = (-x2, x1).
struct Rotation {
  Vec<2> velocity(const Vec<2>& x) const { return {-x[1], x[0]}; }
};

// 2. Unit Jacobian determinant for the volume-preserving maps.
Outcome volume_preservation() {
  const int pairs = 1000;
  const double dt = 0.01, h = 1e-5;
  SchemeConfig cfg;
  const auto& kern = simd::kernels(simd::KernelKind::automatic);
  RandomStream pos(2718);
  double mid = 0, split2 = 0, split3 = 0;
  for (int p = 0; p < pairs; ++p) {
    RandomStream m2(derive_seed(7, p, StreamLabel::modes)), o2(derive_seed(7, p, StreamLabel::ou_init));
    const auto f2 = sample_field<2>({1000, 10.0, 0.75}, 10.0, dt, m2, o2, kern);
    RandomStream m3(derive_seed(8, p, StreamLabel::modes)), o3(derive_seed(8, p, StreamLabel::ou_init));
    const auto f3 = sample_field<3>({100, 10.0, 0.75}, 10.0, dt, m3, o3, kern);
    const Vec<2> x{5 * pos.normal(), 5 * pos.normal()};
    const Vec<3> y{5 * pos.normal(), 5 * pos.normal(), 5 * pos.normal()};
    mid = std::max(mid, std::abs(jacobian_det_fd<2>(
                            [&](const Vec<2>& z) { return step_midpoint2d(f2, z, dt, cfg).after; }, x, h) - 1.0));
    split2 = std::max(split2, std::abs(jacobian_det_fd<2>(
                                  [&](const Vec<2>& z) { return step_modesplit<2>(f2, z, dt).after; }, x, h) - 1.0));
    split3 = std::max(split3, std::abs(jacobian_det_fd<3>(
                                  [&](const Vec<3>& z) { return step_modesplit<3>(f3, z, dt).after; }, y, h) - 1.0));
  }
  const double edt = 0.1;
  const double euler = jacobian_det_fd<2>(
      [&](const Vec<2>& z) { return step_euler_deterministic<2>(Rotation{}, z, edt).after; }, {0.4, -0.3}, h);
  const bool ok = mid <= 1e-6 && split2 <= 1e-6 && split3 <= 1e-6 && std::abs(euler - (1 + edt * edt)) <= 1e-6;
  return {ok, fmt("max |det-1|: midpoint2d %.2e, modesplit 2D %.2e, 3D %.2e (limit 1e-6); "
                  "euler rotation det %.9f (expect 1.01 +- 1e-6)",
                  mid, split2, split3, euler)};
}

// 3. Lag-l autocovariance of the discretized OU amplitude.
Outcome ou_covariance() {
  const std::size_t chains = 100000;
  const auto cov = ou_autocovariance(10.0, 0.05, chains, 5, 31415, simd::kernels(simd::KernelKind::automatic));
  const double tol = 3.0 / std::sqrt(double(chains));
  double worst = 0.0;
  for (int l = 0; l <= 5; ++l) worst = std::max(worst, std::abs(cov[l] - std::exp(-0.5 * l)));
  return {worst <= tol, fmt("max |C(l) - exp(-0.5 l)| over l = 0..5: %.5f (limit %.5f)", worst, tol)};
}

// 4. Radius law of the sampled wavevectors.
Outcome spectrum_law() {
  const int m = 100000;
  RandomStream rng(derive_seed(4, 0, StreamLabel::modes));
  const auto modes = sample_modes<2>({m, 10.0, 0.75}, rng);
  std::vector<double> r;
  for (const auto& k : modes.wavevectors) r.push_back(norm(k));
  const double d = ks_radius_statistic(r, 10.0, 0.75);
  const double crit = ks_critical_1pct(r.size());
  return {d < crit, fmt("KS distance %.5f (1%% critical value %.5f)", d, crit)};
}

Outcome diffusivity_band(ExperimentConfig cfg, double target, double rel) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_ensemble(cfg);
  double se = 0.0;
  const double d = final_d11(res, &se);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double dev = std::abs(d - target) / target;
  return {dev <= rel, fmt("D11(T=%g) = %.4f +- %.4f, target %.4f within %.0f%% (off by %.1f%%), %lld failed paths, "
                          "%.0f s",
                          cfg.horizon, d, se, target, 100 * rel, 100 * dev,
                          static_cast<long long>(res.moments.failed()), secs)};
}

// 5. 2D reference configuration.
Outcome diffusivity_2d() {
  ExperimentConfig cfg;
  cfg.paths = 10000;
  return diffusivity_band(cfg, 0.1736, 0.10);
}

// 6. 3D reference configuration.
Outcome diffusivity_3d() {
  ExperimentConfig cfg;
  cfg.dim = 3;
  cfg.modes = 100;
  cfg.scheme.kind = SchemeKind::modesplit;
  cfg.horizon = 25.0;
  cfg.paths = 10000;
  return diffusivity_band(cfg, 0.1137, 0.15);
}

// 7. Paired convergence study, volume-preserving vs Euler.
Outcome convergence_slopes() {
  ConvergenceConfig cc;
  cc.base.theta = 1.0;
  cc.base.horizon = 2.0;
  cc.base.paths = 10000;
  cc.dt_list = {0.0125, 0.025, 0.05, 0.1};
  cc.schemes = {SchemeKind::midpoint2d, SchemeKind::euler};
  const auto r = convergence_study(cc);
  for (const auto& p : r.points)
    std::printf("  %-10s dt = %-7g |error| = %.3e +- %.1e%s\n", std::string(to_string(p.scheme)).c_str(), p.dt,
                p.abs_error, p.std_err, p.included_in_fit ? "" : "  (excluded)");
  const auto vp = r.fit(SchemeKind::midpoint2d);
  const auto eu = r.fit(SchemeKind::euler);
  const double e_vp = r.point(SchemeKind::midpoint2d, 0.05).abs_error;
  const double e_eu = r.point(SchemeKind::euler, 0.05).abs_error;
  const bool ok = vp && eu && vp->slope >= 0.7 && eu->slope < vp->slope && e_eu >= 3.0 * e_vp;
  const auto slope = [](const std::optional<SlopeFit>& f) { return f ? f->slope : std::nan(""); };
  return {ok, fmt("slope midpoint2d %.3f (min 0.7), euler %.3f (must be lower); error at dt=0.05: euler %.2e vs "
                  "midpoint2d %.2e, ratio %.1f (min 3); reference D11 %.4f, T = 2",
                  slope(vp), slope(eu), e_eu, e_vp, e_vp > 0 ? e_eu / e_vp : INFINITY, r.d11_ref)};
}

// 8. Mixing decay at two time-correlation rates.
Outcome mixing_decay() {
  double rates[2] = {std::nan(""), std::nan("")};
  const double thetas[2] = {1.0, 10.0};
  for (int i = 0; i < 2; ++i) {
    DecayConfig dc;
    dc.base.theta = thetas[i];
    dc.base.dt = 0.05;
    dc.n_states = 100;
    dc.n_paths = 2000;
    dc.horizon_steps = 60;
    const auto c = decay_diagnostic(dc);
    if (c.variance_rate) rates[i] = *c.variance_rate;
    std::printf("  theta = %g: Var(0) = %.3f, fit over n = 1..%lld, rate %.3f\n", thetas[i], c.variance[0],
                static_cast<long long>(c.fit_end - 1), rates[i]);
  }
  const bool ok = rates[0] > 0 && rates[1] > 0 && rates[1] > rates[0];
  return {ok, fmt("variance decay rate theta=1: %.3f, theta=10: %.3f (both > 0, theta=10 larger)", rates[0], rates[1])};
}

// 9. Residual diffusivity as sigma -> 0.
Outcome residual_plateau() {
  ExperimentConfig cfg;
  cfg.theta = 0.1;
  cfg.dt = 0.05;
  cfg.horizon = 50.0;
  cfg.paths = 5000;
  cfg.stride = 100;
  const std::vector<double> sigmas{0.3, 0.1, 0.03, 0.01};
  const auto r = residual_sweep(cfg, sigmas);
  for (const auto& row : r.rows)
    std::printf("  sigma = %-5g kappa = %-8g D11 = %.4f +- %.4f\n", row.sigma, row.kappa, row.d11, row.se);
  const double a = r.rows[2].d11, b = r.rows[3].d11;
  const double floor = 10.0 * 0.5 * 0.3 * 0.3;
  const bool ok = r.plateau_gap <= 0.15 && a > floor && b > floor;
  return {ok, fmt("smallest-kappa D11 %.4f and %.4f: gap %.1f%% (max 15%%), both above %.3f", a, b,
                  100 * r.plateau_gap, floor)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DRIFTDIFFUSE_CLI + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// 10. Replaying a manifest with 1 and 8 workers gives identical bytes.
Outcome reproducibility() {
  const fs::path root = fs::current_path() / "acceptance_repro";
  fs::remove_all(root);
  struct Case {
    std::string name, first, files;
  };
  const std::vector<Case> cases{
      {"simulate", "simulate --paths 320 --horizon 2.2", "diffusivity.csv moments.csv"},
      {"convergence", "convergence --theta 1 --horizon 0.5 --paths 192 --compare midpoint2d,euler",
       "convergence.csv"},
      {"residual", "residual --theta 0.1 --dt 0.05 --horizon 2 --paths 192", "residual.csv"},
      {"decay", "decay --dt 0.05 --states 8 --inner-paths 80 --steps 10", "decay.csv"},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    const fs::path a = root / (c.name + "_t1"), b = root / (c.name + "_t8"), seed = root / (c.name + "_seed");
    int rc = run_cli(c.first + " --out \"" + seed.string() + "\" --threads 2");
    const std::string manifest = (seed / "manifest.txt").string();
    rc |= run_cli(c.name + " --config \"" + manifest + "\" --out \"" + a.string() + "\" --threads 1");
    rc |= run_cli(c.name + " --config \"" + manifest + "\" --out \"" + b.string() + "\" --threads 8");
    bool same = rc == 0;
    std::string file;
    std::istringstream files(c.files);
    while (files >> file) {
      const std::string x = fs::exists(a / file) ? read_text_file(a / file) : "";
      const std::string y = fs::exists(b / file) ? read_text_file(b / file) : "-";
      same = same && x == y;
    }
    ok = ok && same;
    detail += c.name + (same ? " identical; " : " DIFFER; ");
  }
  return {ok, detail + "threads 1 vs 8 from one manifest"};
}

// 11. Order of the mean one-step deterministic increment.
Outcome drift_order() {
  const std::int64_t paths = 100000;
  const double dts[2] = {0.01, 0.02};
  double mag[2], se[2];
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cfg;
    cfg.dt = dts[i];
    cfg.horizon = dts[i];
    cfg.stride = 1;
    cfg.paths = paths;
    cfg.sigma = 0.1;
    // Per-path increments, for the noise level of the mean.
    struct Sums {
      double s[2] = {0, 0}, q[2] = {0, 0};
    };
    Sums tot;
    ordered_chunks(
        paths, kChunkPaths, resolve_threads(0),
        [&](std::int64_t b, std::int64_t e) {
          Sums s;
          for (std::int64_t p = b; p < e; ++p) {
            const auto tr = run_path<2>(cfg, static_cast<std::uint64_t>(p));
            for (int j = 0; j < 2; ++j) {
              s.s[j] += tr.drift.back()[j];
              s.q[j] += tr.drift.back()[j] * tr.drift.back()[j];
            }
          }
          return s;
        },
        [&](Sums&& s) {
          for (int j = 0; j < 2; ++j) {
            tot.s[j] += s.s[j];
            tot.q[j] += s.q[j];
          }
        });
    const double n = double(paths);
    double m2 = 0, v = 0;
    for (int j = 0; j < 2; ++j) {
      const double m = tot.s[j] / n;
      m2 += m * m;
      v += (tot.q[j] / n - m * m) / n;
    }
    mag[i] = std::sqrt(m2);
    se[i] = std::sqrt(v);
    std::printf("  dt = %g: |Bbar| = %.3e, Monte Carlo noise level %.3e\n", dts[i], mag[i], se[i]);
  }
  const double exponent = std::log(mag[1] / mag[0]) / std::log(dts[1] / dts[0]);
  const bool ok = std::abs(exponent - 2.0) <= 0.5;
  return {ok, fmt("fitted exponent %.2f (target 2 +- 0.5); |Bbar| / noise = %.2f, %.2f", exponent, mag[0] / se[0],
                  mag[1] / se[1])};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftdiffuse acceptance suite"};
  std::vector<int> only;
  app.add_option("--criterion", only, "criterion number(s), 1-11; default all")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "pure diffusion", pure_diffusion},
      {2, "volume preservation", volume_preservation},
      {3, "OU covariance", ou_covariance},
      {4, "spectrum law", spectrum_law},
      {5, "2D effective diffusivity", diffusivity_2d},
      {6, "3D effective diffusivity", diffusivity_3d},
      {7, "convergence slopes", convergence_slopes},
      {8, "mixing decay", mixing_decay},
      {9, "residual diffusivity", residual_plateau},
      {10, "reproducibility", reproducibility},
      {11, "drift order", drift_order},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
