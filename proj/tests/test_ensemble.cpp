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
#include <limits>

#include "driftdiffuse/analysis.hpp"
#include "driftdiffuse/ensemble.hpp"

using namespace driftdiffuse;

namespace {

/// b = c everywhere; NaN on flagged paths so the implicit solve fails.
struct ConstantField {
  Vec<2> c{};
  Vec<2> velocity(const Vec<2>&) const { return c; }
  void advance(RandomStream&, int = 1) {}
};

struct ConstantFactory {
  Vec<2> c{};
  std::uint64_t fail_every = 0;
  ConstantField operator()(std::uint64_t p, RandomStream&, RandomStream&) const {
    if (fail_every && p % fail_every == 0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return {{nan, nan}};
    }
    return {c};
  }
};

ExperimentConfig small_spectral() {
  ExperimentConfig cfg;
  cfg.modes = 200;
  cfg.horizon = 0.5;
  cfg.stride = 10;
  cfg.paths = 150;
  return cfg;
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("record grid") {
    ExperimentConfig cfg;
    cfg.horizon = 0.25;
    cfg.dt = 0.01;
    cfg.stride = 10;
    CHECK(cfg.steps() == 25);
    CHECK(cfg.record_steps() == std::vector<std::int64_t>{10, 20, 25});
    cfg.horizon = 0.255;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("compensated sum") {
    CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-16);
    s.add(-1.0);
    CHECK(s.value() == doctest::Approx(1e-13).epsilon(1e-6));
  }

  TEST_CASE("zero field gives pure diffusion") {
    ExperimentConfig cfg;
    cfg.field = FieldKind::zero;
    cfg.horizon = 10.0;
    cfg.paths = 10000;
    cfg.stride = 100;
    const auto res = run_ensemble(cfg);
    const auto curve = effective_diffusivity(res.moments);
    const std::size_t k = curve.records() - 1;
    CHECK(curve.times[k] == doctest::Approx(10.0));
    CHECK(std::abs(curve.entry(k, 0, 0) - 0.005) < 3.0 * curve.stderr_of(k, 0));
    CHECK(std::abs(curve.entry(k, 1, 1) - 0.005) < 3.0 * curve.stderr_of(k, 1));
    CHECK(res.moments.failed() == 0);
  }

  TEST_CASE("single path ensemble") {
    ExperimentConfig cfg = small_spectral();
    cfg.paths = 1;
    const auto res = run_ensemble(cfg, 1);
    CHECK(res.moments.count(0) == 1);
    CHECK_THROWS_AS(effective_diffusivity(res.moments), NumericalError);
  }

  TEST_CASE("results do not depend on the worker count") {
    ExperimentConfig cfg = small_spectral();
    const auto a = run_ensemble(cfg, 1);
    const auto b = run_ensemble(cfg, 8);
    CHECK(a.moments == b.moments);
    CHECK(a.solver.iterations == b.solver.iterations);
    cfg.kernel = simd::KernelKind::scalar;
    const auto c = run_ensemble(cfg, 3);
    CHECK(c.moments.count(0) == a.moments.count(0));
    CHECK(c.moments.sum_xx(0, 0, 0) == doctest::Approx(a.moments.sum_xx(0, 0, 0)).epsilon(1e-9));
  }

  TEST_CASE("3D ensemble runs with modesplit") {
    ExperimentConfig cfg = small_spectral();
    cfg.dim = 3;
    cfg.modes = 20;
    cfg.scheme.kind = SchemeKind::modesplit;
    cfg.paths = 20;
    const auto res = run_ensemble(cfg, 2);
    CHECK(res.moments.dim() == 3);
    CHECK(res.moments.count(res.moments.records() - 1) == 20);
  }

  TEST_CASE("merge is elementwise and rejects mismatched grids") {
    MomentAccumulator a(2, {1, 2}, 0.1), b(2, {1, 2}, 0.1), c(2, {1, 3}, 0.1);
    const double p1[] = {1, 2, 3, 4}, d1[] = {0, 0, 0, 0};
    const double p2[] = {-1, 0, 5, 1}, d2[] = {0.1, 0, 0.2, 0};
    a.add_path(p1, d1);
    b.add_path(p2, d2);
    b.add_failed();
    const auto m = merge(a, b);
    CHECK(m.count(1) == 2);
    CHECK(m.failed() == 1);
    CHECK(m.sum_x(1, 0) == 8.0);
    CHECK(m.sum_xx(1, 0, 1) == 3.0 * 4.0 + 5.0 * 1.0);
    CHECK(m.sum_xx(0, 1, 0) == m.sum_xx(0, 0, 1));
    CHECK(m.sum_b(1, 0) == doctest::Approx(0.2));
    CHECK(merge(b, a) == m);
    CHECK_THROWS_AS(merge(a, c), ConfigError);
  }

  TEST_CASE("mean drift estimates") {
    ExperimentConfig cfg;
    cfg.field = FieldKind::zero;
    cfg.horizon = 0.1;
    cfg.paths = 100;
    CHECK(estimate_mean_drift(run_ensemble(cfg).moments) == std::vector<double>{0.0, 0.0});
    const auto res = run_ensemble_with<2>(cfg, ConstantFactory{{0.3, -0.7}}, 1);
    const auto drift = estimate_mean_drift(res.moments);
    CHECK(drift[0] == doctest::Approx(0.3 * cfg.dt).epsilon(1e-12));
    CHECK(drift[1] == doctest::Approx(-0.7 * cfg.dt).epsilon(1e-12));
  }

  TEST_CASE("failed paths are tolerated up to one percent") {
    ExperimentConfig cfg;
    cfg.horizon = 0.05;
    cfg.paths = 1000;
    const auto ok = run_ensemble_with<2>(cfg, ConstantFactory{{0.1, 0.1}, 200}, 2);
    CHECK(ok.moments.failed() == 5);
    CHECK(ok.failed_fraction == doctest::Approx(0.005));
    CHECK_THROWS_AS(run_ensemble_with<2>(cfg, ConstantFactory{{0.1, 0.1}, 50}, 2), NumericalError);
  }

  TEST_CASE("path streams depend only on seed and index") {
    ExperimentConfig cfg = small_spectral();
    const auto a = run_path<2>(cfg, 17);
    const auto b = run_path<2>(cfg, 17);
    const auto c = run_path<2>(cfg, 18);
    CHECK(a.positions == b.positions);
    CHECK(a.positions != c.positions);
  }

  TEST_CASE("noise substeps share one realization across step sizes") {
    // Same seed, dt and dt/2 with noise_substeps 2 and 1: the fine run's
    // field at even steps and its summed kicks drive the coarse run, so the
    // zero-field endpoints coincide.
    ExperimentConfig fine;
    fine.field = FieldKind::zero;
    fine.horizon = 1.0;
    fine.dt = 0.005;
    fine.paths = 64;
    ExperimentConfig coarse = fine;
    coarse.dt = 0.01;
    coarse.noise_substeps = 2;
    for (std::uint64_t p = 0; p < 5; ++p) {
      const auto a = run_path<2>(fine, p);
      const auto b = run_path<2>(coarse, p);
      CHECK(a.positions.back()[0] == doctest::Approx(b.positions.back()[0]).epsilon(1e-12));
    }
  }

  TEST_CASE("joint convergence arm matches a standalone run") {
    ConvergenceConfig cc;
    cc.base = small_spectral();
    cc.base.horizon = 0.2;
    cc.base.paths = 70;
    cc.dt_list = {0.02, 0.04, 0.05};
    cc.dt_ref = 0.005;
    const auto joint = convergence_study(cc, 2);

    ExperimentConfig solo = cc.base;
    solo.dt = 0.02;
    solo.noise_substeps = 4;
    const auto curve = effective_diffusivity(run_ensemble(solo, 1).moments);
    CHECK(joint.point(SchemeKind::midpoint2d, 0.02).d11 == curve.entry(curve.records() - 1, 0, 0));

    ExperimentConfig ref = cc.base;
    ref.dt = 0.005;
    const auto rc = effective_diffusivity(run_ensemble(ref, 1).moments);
    CHECK(joint.d11_ref == rc.entry(rc.records() - 1, 0, 0));
  }

  TEST_CASE("configuration errors name the key") {
    ExperimentConfig cfg;
    cfg.dim = 4;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("dim"), ConfigError);
    cfg = {};
    cfg.alpha = 1.2;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("alpha"), ConfigError);
    cfg = {};
    cfg.paths = 0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("paths"), ConfigError);
  }
}
