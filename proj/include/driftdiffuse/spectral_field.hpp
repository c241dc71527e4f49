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

// Random, stationary, divergence-free velocity fields built as a finite sum
// of Fourier modes (randomization method) whose amplitudes follow
// independent unit Ornstein-Uhlenbeck processes:
//
//   b(t, x) = M^{-1/2} sum_m [u_m(t) cos(k_m . x) + v_m(t) sin(k_m . x)]
//
// 2D: u_m = xi_m s_m, v_m = eta_m s_m, s_m = k_m^perp / |k_m|, k^perp = (-k2, k1).
// 3D: u_m = xi_m x khat_m, v_m = eta_m x khat_m (right-handed cross product).
//
// Every amplitude is orthogonal to its wavevector, so each mode, and hence
// the sum, is exactly divergence-free.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "driftdiffuse/rng.hpp"
#include "driftdiffuse/simd/kernels.hpp"
#include "driftdiffuse/types.hpp"

namespace driftdiffuse {

/// Isotropic spectrum with density of |k| proportional to r^{1-2 alpha} on (0, K].
struct SpectralParams {
  int modes = 1000;
  double cutoff = 10.0;
  double alpha = 0.75;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Inverse CDF of the radius law: r = K U^{1/(2-2 alpha)}.
double radius_from_uniform(double u, double cutoff, double alpha);

/// CDF of the radius law, (r/K)^{2-2 alpha}.
double radius_cdf(double r, double cutoff, double alpha);

template <int D>
struct SpectralModeSet {
  std::size_t count = 0;
  std::vector<Vec<D>> wavevectors;
  /// 2D: unit k^perp; 3D: unit k.
  std::vector<Vec<D>> frames;
};

template <int D>
SpectralModeSet<D> make_mode_set(std::span<const Vec<D>> wavevectors);

template <int D>
SpectralModeSet<D> sample_modes(const SpectralParams& params, RandomStream& rng);

/// Scalar OU amplitudes, component-major: xi[c * modes + m].
struct OuAmplitudeState {
  std::size_t modes = 0;
  int components = 1;  // 1 in 2D, 3 in 3D
  double theta = 0.0;
  double dt = 0.0;
  std::uint64_t step = 0;
  std::vector<double> xi;
  std::vector<double> eta;
};

/// Components per mode for a d-dimensional field.
constexpr int ou_components(int dim) { return dim == 2 ? 1 : 3; }

OuAmplitudeState init_ou(std::size_t modes, int components, double theta, double dt, RandomStream& rng);

/// One exact OU step: x <- e^{-theta dt} x + sqrt(1 - e^{-2 theta dt}) z.
void advance_ou(OuAmplitudeState& state, RandomStream& rng,
                const simd::KernelTable& kernels = simd::scalar_kernels());

/// Frozen sum of Fourier modes with explicit amplitudes (already scaled).
/// Owns the padded structure-of-arrays layout the kernels consume.
template <int D>
class ModeSum {
 public:
  ModeSum() = default;
  explicit ModeSum(std::size_t count, const simd::KernelTable& kernels = simd::scalar_kernels());

  std::size_t size() const { return count_; }
  void set_mode(std::size_t m, const Vec<D>& k, const Vec<D>& u, const Vec<D>& v);
  Vec<D> wavevector(std::size_t m) const;
  Vec<D> cos_amplitude(std::size_t m) const;
  Vec<D> sin_amplitude(std::size_t m) const;

  Vec<D> velocity(const Vec<D>& x) const;
  Vec<D> velocity_jacobian(const Vec<D>& x, Mat<D>& jac) const;
  /// Contribution of mode m alone.
  Vec<D> mode_velocity(std::size_t m, const Vec<D>& x) const;

  simd::ModeView view() const;
  const simd::KernelTable& kernels() const { return *kernels_; }

  /// Frozen: advancing does nothing.
  void advance(RandomStream&, int = 1) {}

 private:
  template <int>
  friend class SpectralField;

  std::size_t count_ = 0;
  std::size_t padded_ = 0;
  std::vector<double> k_[D];
  std::vector<double> u_[D];
  std::vector<double> v_[D];
  const simd::KernelTable* kernels_ = &simd::scalar_kernels();
};

/// A time-dependent random field: modes fixed, OU amplitudes advanced once
/// per step and frozen within it.
template <int D>
class SpectralField {
 public:
  SpectralField(SpectralModeSet<D> modes, OuAmplitudeState ou,
                const simd::KernelTable& kernels = simd::scalar_kernels());

  Vec<D> velocity(const Vec<D>& x) const { return sum_.velocity(x); }
  Vec<D> velocity_jacobian(const Vec<D>& x, Mat<D>& jac) const { return sum_.velocity_jacobian(x, jac); }
  std::size_t mode_count() const { return modes_.count; }
  Vec<D> mode_velocity(std::size_t m, const Vec<D>& x) const { return sum_.mode_velocity(m, x); }

  /// `substeps` OU steps of size ou().dt.
  void advance(RandomStream& rng, int substeps = 1);

  const SpectralModeSet<D>& modes() const { return modes_; }
  const OuAmplitudeState& ou() const { return ou_; }
  const ModeSum<D>& mode_sum() const { return sum_; }

 private:
  void refresh_amplitudes();

  SpectralModeSet<D> modes_;
  OuAmplitudeState ou_;
  ModeSum<D> sum_;
};

/// Draws modes, then OU initial state, from their dedicated streams.
template <int D>
SpectralField<D> sample_field(const SpectralParams& params, double theta, double dt,
                              RandomStream& mode_rng, RandomStream& ou_rng,
                              const simd::KernelTable& kernels = simd::scalar_kernels());

template <class F, int D>
concept VelocityFieldLike = requires(const F& f, const Vec<D>& x) {
  { f.velocity(x) } -> std::same_as<Vec<D>>;
};

/// Max over points of |central-difference divergence| / (|b(x)| + 1e-30).
template <int D, class Field>
  requires VelocityFieldLike<Field, D>
double check_divergence(const Field& field, std::span<const Vec<D>> points, double h) {
  if (!(h > 0.0)) throw ConfigError("check_divergence: h must be positive");
  double worst = 0.0;
  for (const Vec<D>& x : points) {
    double div = 0.0;
    for (int i = 0; i < D; ++i) {
      Vec<D> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      div += (field.velocity(xp)[i] - field.velocity(xm)[i]) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(div) / (norm(field.velocity(x)) + 1e-30));
  }
  return worst;
}

}  // namespace driftdiffuse
