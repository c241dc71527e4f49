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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "driftdiffuse/analysis.hpp"
#include "driftdiffuse/ensemble.hpp"

using namespace driftdiffuse;

namespace {

DecayConfig small_decay(double theta, int modes) {
  DecayConfig dc;
  dc.base.modes = modes;
  dc.base.theta = theta;
  dc.base.dt = 0.01;
  dc.n_states = 100;
  dc.n_paths = 200;
  dc.horizon_steps = 5;
  return dc;
}

/// b = (cos x2, 0), frozen.
struct ShearField {
  Vec<2> velocity(const Vec<2>& x) const { return {std::cos(x[1]), 0.0}; }
  void advance(RandomStream&, int = 1) {}
};

struct ShearFactory {
  ShearField operator()(std::uint64_t, RandomStream&, RandomStream&) const { return {}; }
};

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("raw estimator on synthetic ballistic paths") {
    // Two paths X1 = +t and -t: E[X1^2] / 2t = t / 2.
    MomentAccumulator acc(2, {10, 20, 40}, 0.05);
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> pos, drift(6, 0.0);
      for (double t : {0.5, 1.0, 2.0}) {
        pos.push_back(sgn * t);
        pos.push_back(0.0);
      }
      acc.add_path(pos, drift);
    }
    const auto c = effective_diffusivity(acc);
    REQUIRE(c.records() == 3);
    CHECK(c.times[1] == doctest::Approx(1.0));
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(c.entry(k, 0, 0) == doctest::Approx(c.times[k] / 2));
      CHECK(c.entry(k, 1, 1) == 0.0);
      CHECK(c.entry(k, 0, 1) == 0.0);
      CHECK(c.stderr_of(k, 0) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  TEST_CASE("noiseless shear from the origin is ballistic") {
    ExperimentConfig cfg;
    cfg.sigma = 0.0;
    cfg.horizon = 4.0;
    cfg.paths = 8;
    cfg.stride = 100;
    const auto c = effective_diffusivity(run_ensemble_with<2>(cfg, ShearFactory{}, 1).moments);
    for (std::size_t k = 0; k < c.records(); ++k) CHECK(c.entry(k, 0, 0) == doctest::Approx(c.times[k] / 2));
  }

  TEST_CASE("corrected estimator removes the mean drift") {
    // X = n c + e with e = +-1 and recorded drift n c.
    const double c = 0.01, dt = 0.1;
    MomentAccumulator acc(2, {50}, dt);
    for (double e : {1.0, -1.0}) {
      const double pos[] = {50 * c + e, 0.0}, drift[] = {50 * c, 0.0};
      acc.add_path(pos, drift);
    }
    const double t = 5.0;
    const auto raw = effective_diffusivity(acc, EstimatorVariant::raw);
    const auto cor = effective_diffusivity(acc, EstimatorVariant::corrected);
    CHECK(raw.entry(0, 0, 0) == doctest::Approx((2500 * c * c + 1.0) / (2 * t)));
    CHECK(cor.entry(0, 0, 0) == doctest::Approx(1.0 / (2 * t)));
    CHECK(parse_estimator_variant("corrected") == EstimatorVariant::corrected);
  }

  TEST_CASE("standard error shrinks as one over root N") {
    ExperimentConfig cfg;
    cfg.field = FieldKind::zero;
    cfg.horizon = 1.0;
    cfg.stride = 100;
    std::vector<double> ns, ses;
    for (std::int64_t n : {1000, 4000, 16000, 64000}) {
      cfg.paths = n;
      const auto c = effective_diffusivity(run_ensemble(cfg).moments);
      ns.push_back(double(n));
      ses.push_back(c.stderr_of(0, 0));
    }
    CHECK(fit_loglog_slope(ns, ses).slope == doctest::Approx(-0.5).epsilon(0.1));
  }

  TEST_CASE("loglog slope of an exact power law") {
    const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
    const auto f = fit_loglog_slope(x, y);
    CHECK(f.slope == doctest::Approx(1.5));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK(f.residual_rms < 1e-12);
    CHECK(f.log_x.size() == 4);
  }

  TEST_CASE("loglog slope of a constant is zero") {
    const std::vector<double> x{1, 2, 4}, y{5, 5, 5};
    CHECK(fit_loglog_slope(x, y).slope == doctest::Approx(0.0));
  }

  TEST_CASE("noisy power law recovers its exponent") {
    RandomStream rng(12);
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
      const double dt = 0.001 * std::pow(2.0, i / 8.0);
      x.push_back(dt);
      y.push_back(std::pow(dt, 1.17) * std::exp(0.1 * rng.normal()));
    }
    const auto f = fit_loglog_slope(x, y);
    CHECK(std::abs(f.slope - 1.17) < 0.1);
    // Least-squares residuals are orthogonal to the centred abscissae.
    double mx = 0;
    for (double v : f.log_x) mx += v / f.log_x.size();
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += (f.log_y[i] - f.intercept - f.slope * f.log_x[i]) * (f.log_x[i] - mx);
    CHECK(std::abs(s) < 1e-9);
  }

  TEST_CASE("loglog slope input errors") {
    const std::vector<double> one{1.0}, two{1.0, 2.0}, neg{1.0, -2.0}, same{3.0, 3.0};
    CHECK_THROWS_AS(fit_loglog_slope(one, one), ConfigError);
    CHECK_THROWS_AS(fit_loglog_slope(two, neg), ConfigError);
    CHECK_THROWS_AS(fit_loglog_slope(same, two), ConfigError);
    CHECK_THROWS_AS(fit_loglog_slope(two, one), ConfigError);
  }

  TEST_CASE("convergence study on the zero field is exact") {
    ConvergenceConfig cc;
    cc.base.field = FieldKind::zero;
    cc.base.horizon = 1.0;
    cc.base.paths = 500;
    cc.dt_list = {0.1, 0.05, 0.025};
    cc.schemes = {SchemeKind::midpoint2d, SchemeKind::euler};
    const auto r = convergence_study(cc, 2);
    CHECK(r.dt_ref == doctest::Approx(0.00625));
    CHECK(r.points.size() == 6);
    for (const auto& p : r.points) {
      CHECK(p.abs_error < 1e-12);
      CHECK_FALSE(p.included_in_fit);
    }
    CHECK_FALSE(r.fit(SchemeKind::euler).has_value());
    CHECK_FALSE(r.warnings.empty());
  }

  TEST_CASE("convergence configuration errors") {
    ConvergenceConfig cc;
    cc.dt_list = {0.1, 0.05};
    CHECK_THROWS_AS(cc.validate(), ConfigError);
    cc.dt_list = {0.1, 0.05, 0.03};
    cc.base.horizon = 1.0;
    CHECK_THROWS_AS(convergence_study(cc, 1), ConfigError);  // 0.03 is not a multiple of 0.0075
  }

  TEST_CASE("decay with a fast field collapses to the floor") {
    DecayConfig dc = small_decay(1000.0, 50);
    const auto c = decay_diagnostic(dc, 2);
    REQUIRE(c.variance.size() == 6);
    CHECK(c.floor == doctest::Approx(1.0 / 200));
    CHECK(c.variance[0] == doctest::Approx(0.5).epsilon(0.4));
    for (std::size_t n = 1; n < c.variance.size(); ++n) CHECK(c.variance[n] < 2.0 * c.floor);
  }

  TEST_CASE("decay with a frozen single mode and no noise is constant") {
    DecayConfig dc = small_decay(0.0, 1);
    dc.base.sigma = 0.0;
    dc.n_paths = 4;
    dc.n_states = 20;
    const auto c = decay_diagnostic(dc, 1);
    for (std::size_t n = 1; n < c.variance.size(); ++n)
      CHECK(c.variance[n] == doctest::Approx(c.variance[0]).epsilon(1e-12));
  }

  TEST_CASE("decay rate fit on a synthetic curve") {
    DecayCurve c;
    c.floor = 1e-4;
    for (int n = 0; n <= 20; ++n) {
      c.n.push_back(n);
      c.t.push_back(0.1 * n);
      c.variance.push_back(0.5 * std::exp(-6.0 * 0.1 * n));
    }
    fit_decay_rate(c);
    REQUIRE(c.variance_rate.has_value());
    CHECK(*c.variance_rate == doctest::Approx(6.0));
    CHECK(*c.amplitude_rate == doctest::Approx(3.0));
    // Stops at the first variance below 10 floor: 0.5 e^{-0.6 n} < 1e-3 from n = 11.
    CHECK(c.fit_end == 11);
  }

  TEST_CASE("residual sweep of pure diffusion") {
    ExperimentConfig cfg;
    cfg.field = FieldKind::zero;
    cfg.horizon = 2.0;
    cfg.paths = 20000;
    const std::vector<double> sigmas{0.3, 0.1, 0.03};
    const auto r = residual_sweep(cfg, sigmas, 2);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
      CHECK(row.kappa == doctest::Approx(row.sigma * row.sigma / 2));
      CHECK(std::abs(row.d11 - row.kappa) < 4.0 * row.se);
    }
    CHECK(r.plateau_gap > 0.5);  // no plateau without advection
    const std::vector<double> rising{0.1, 0.3};
    CHECK_THROWS_AS(residual_sweep(cfg, rising, 1), ConfigError);
  }

  TEST_CASE("plateau summary") {
    ResidualResult r;
    r.rows = {{0.3, 0.045, 0.6, 0, 1, 0}, {0.1, 0.005, 0.5, 0, 1, 0}, {0.03, 0.00045, 0.4, 0, 1, 0}};
    summarize_plateau(r);
    CHECK(r.plateau == doctest::Approx(0.45));
    CHECK(r.plateau_gap == doctest::Approx(0.2));
  }
}
