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

// One-step maps for dX = b(t, X) dt + sigma dW.
//
// A step is the Lie-Trotter composition of a deterministic sub-step
// X -> Phi(X) = X + B(X), evaluated with the field frozen at t_n, and an
// additive Gaussian kick sigma * xi, xi ~ N(0, dt I). Phi is one of
//   midpoint2d  X' = X + dt b((X + X') / 2)                 (2D, area-preserving)
//   modesplit   X <- X + dt b_m(X), m = 1..M in order        (any d, volume-preserving)
//   euler       X' = X + dt b(X)                             (baseline, not preserving)
//
// For modesplit each sub-map is the exact flow of the single-mode field b_m:
// k_m . b_m = 0 keeps the phase k_m . X constant along it, so b_m is constant
// along its own trajectory and the map is a shear with unit Jacobian.

#include <cmath>
#include <string>
#include <string_view>

#include "driftdiffuse/rng.hpp"
#include "driftdiffuse/spectral_field.hpp"
#include "driftdiffuse/types.hpp"

namespace driftdiffuse {

enum class SchemeKind { midpoint2d, modesplit, euler };
enum class SolverKind { newton, fixed_point };

SchemeKind parse_scheme_kind(std::string_view text);
std::string_view to_string(SchemeKind kind);
SolverKind parse_solver_kind(std::string_view text);
std::string_view to_string(SolverKind kind);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::midpoint2d;
  SolverKind solver = SolverKind::newton;
  double tol = 1e-12;
  int max_iterations = 50;
  double fd_step = 1e-5;

  void validate(int dim) const;
};

template <int D>
struct StepRecord {
  Vec<D> before{};
  Vec<D> after{};
  /// Phi(before) - before; excludes the Brownian kick.
  Vec<D> increment{};
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

/// Implicit solve did not reach `tol` within `max_iterations`.
class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

template <class F, int D>
concept ModalField = VelocityFieldLike<F, D> && requires(const F& f, std::size_t m, const Vec<D>& x) {
  { f.mode_count() } -> std::convertible_to<std::size_t>;
  { f.mode_velocity(m, x) } -> std::same_as<Vec<D>>;
};

template <class F, int D>
concept JacobianField = VelocityFieldLike<F, D> && requires(const F& f, const Vec<D>& x, Mat<D>& j) {
  { f.velocity_jacobian(x, j) } -> std::same_as<Vec<D>>;
};

/// Implicit midpoint in 2D, warm-started at x. Newton uses the analytic
/// Jacobian of b; fixed-point needs only b. Iterations count evaluations of
/// b, so the identity map reports 1.
template <class Field>
StepRecord<2> step_midpoint2d(const Field& field, const Vec<2>& x, double dt, const SchemeConfig& cfg) {
  StepRecord<2> rec;
  rec.before = x;
  Vec<2> y = x;
  double res = 0.0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const Vec<2> mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
    Vec<2> b;
    Mat<2> jac{};
    if constexpr (JacobianField<Field, 2>) {
      if (cfg.solver == SolverKind::newton)
        b = field.velocity_jacobian(mid, jac);
      else
        b = field.velocity(mid);
    } else {
      b = field.velocity(mid);
    }
    const Vec<2> f{y[0] - x[0] - dt * b[0], y[1] - x[1] - dt * b[1]};
    res = std::hypot(f[0], f[1]);
    if (res <= cfg.tol) {
      rec.after = y;
      rec.increment = y - x;
      rec.iterations = it;
      rec.residual = res;
      return rec;
    }
    if (!std::isfinite(res)) break;
    if constexpr (JacobianField<Field, 2>) {
      if (cfg.solver == SolverKind::newton) {
        // (I - dt/2 J) delta = -F
        const double h = 0.5 * dt;
        const double a = 1.0 - h * jac[0][0], bb = -h * jac[0][1];
        const double c = -h * jac[1][0], d = 1.0 - h * jac[1][1];
        const double det = a * d - bb * c;
        y[0] -= (d * f[0] - bb * f[1]) / det;
        y[1] -= (a * f[1] - c * f[0]) / det;
        continue;
      }
    }
    y = x + dt * b;
  }
  throw NonConvergence("midpoint2d: no convergence after " + std::to_string(cfg.max_iterations) +
                       " iterations (residual " + std::to_string(res) + "); reduce dt");
}

template <int D, class Field>
  requires ModalField<Field, D>
StepRecord<D> step_modesplit(const Field& field, const Vec<D>& x, double dt) {
  StepRecord<D> rec;
  rec.before = x;
  Vec<D> y = x;
  const std::size_t n = field.mode_count();
  for (std::size_t m = 0; m < n; ++m) {
    const Vec<D> bm = field.mode_velocity(m, y);
    for (int i = 0; i < D; ++i) y[i] += dt * bm[i];
  }
  rec.after = y;
  rec.increment = y - x;
  rec.iterations = 1;
  return rec;
}

template <int D, class Field>
  requires VelocityFieldLike<Field, D>
StepRecord<D> step_euler_deterministic(const Field& field, const Vec<D>& x, double dt) {
  StepRecord<D> rec;
  rec.before = x;
  rec.increment = dt * field.velocity(x);
  rec.after = x + rec.increment;
  rec.iterations = 1;
  return rec;
}

/// X + sigma * xi with xi ~ N(0, dt I). With `substeps` r > 1 the kick is the
/// sum of r independent N(0, dt/r I) draws, consuming exactly the normals r
/// fine steps of size dt/r would.
template <int D>
Vec<D> add_brownian_kick(const Vec<D>& x, double sigma, double dt, RandomStream& rng, int substeps = 1) {
  const double sub_sd = std::sqrt(dt / substeps);
  Vec<D> y = x;
  Vec<D> sum{};
  for (int s = 0; s < substeps; ++s)
    for (int i = 0; i < D; ++i) sum[i] += rng.normal();
  for (int i = 0; i < D; ++i) y[i] += sigma * sub_sd * sum[i];
  return y;
}

/// The deterministic sub-step selected by cfg.kind.
template <int D, class Field>
StepRecord<D> deterministic_step(const Field& field, const Vec<D>& x, double dt, const SchemeConfig& cfg) {
  switch (cfg.kind) {
    case SchemeKind::midpoint2d:
      if constexpr (D == 2) {
        return step_midpoint2d(field, x, dt, cfg);
      } else {
        throw ConfigError("scheme: midpoint2d requires dim = 2");
      }
    case SchemeKind::modesplit:
      if constexpr (ModalField<Field, D>) {
        return step_modesplit<D>(field, x, dt);
      } else {
        throw ConfigError("scheme: modesplit requires a modal (spectral) field");
      }
    case SchemeKind::euler:
    default:
      return step_euler_deterministic<D>(field, x, dt);
  }
}

/// Deterministic sub-step, then the kick. The kick is drawn after the solve,
/// so the Brownian draws are identical for every scheme.
template <int D, class Field>
StepRecord<D> step_full(const Field& field, const Vec<D>& x, double dt, double sigma, const SchemeConfig& cfg,
                        RandomStream& rng, int substeps = 1) {
  StepRecord<D> rec = deterministic_step<D>(field, x, dt, cfg);
  rec.after = add_brownian_kick<D>(rec.after, sigma, dt, rng, substeps);
  return rec;
}

/// Euler-Maruyama: X' = X + dt b(t_n, X) + sigma xi.
template <int D, class Field>
StepRecord<D> step_euler(const Field& field, const Vec<D>& x, double dt, double sigma, RandomStream& rng) {
  StepRecord<D> rec = step_euler_deterministic<D>(field, x, dt);
  rec.after = add_brownian_kick<D>(rec.after, sigma, dt, rng);
  return rec;
}

/// Determinant of the central-difference Jacobian of a deterministic map.
/// With h = 1e-5 the O(h^2) truncation and the solver noise tol/h stay well
/// under 1e-6 for tol = 1e-12.
template <int D, class Map>
double jacobian_det_fd(Map&& map, const Vec<D>& x, double h) {
  if (!(h > 0.0)) throw ConfigError("jacobian_det_fd: h must be positive");
  Mat<D> jac{};
  for (int j = 0; j < D; ++j) {
    Vec<D> xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec<D> fp = map(xp);
    const Vec<D> fm = map(xm);
    for (int i = 0; i < D; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return determinant<D>(jac);
}

}  // namespace driftdiffuse
