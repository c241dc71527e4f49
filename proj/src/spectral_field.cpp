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

#include "driftdiffuse/spectral_field.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace driftdiffuse {

void SpectralParams::validate() const {
  if (modes < 1) throw ConfigError("modes: must be >= 1 (got " + std::to_string(modes) + ")");
  if (!(cutoff > 0.0) || !std::isfinite(cutoff))
    throw ConfigError("cutoff_k: must be positive and finite (got " + std::to_string(cutoff) + ")");
  if (!(alpha < 1.0) || !std::isfinite(alpha))
    throw ConfigError("alpha: must be < 1 for an integrable spectrum (got " + std::to_string(alpha) + ")");
}

double radius_from_uniform(double u, double cutoff, double alpha) {
  return cutoff * std::pow(u, 1.0 / (2.0 - 2.0 * alpha));
}

double radius_cdf(double r, double cutoff, double alpha) {
  if (r <= 0.0) return 0.0;
  if (r >= cutoff) return 1.0;
  return std::pow(r / cutoff, 2.0 - 2.0 * alpha);
}

namespace {

Vec<2> frame_of(const Vec<2>& k) {
  const double r = norm(k);
  return {-k[1] / r, k[0] / r};
}

Vec<3> frame_of(const Vec<3>& k) { return (1.0 / norm(k)) * k; }

std::size_t padded_size(std::size_t n) {
  return (n + simd::kModePadding - 1) / simd::kModePadding * simd::kModePadding;
}

}  // namespace

template <int D>
SpectralModeSet<D> make_mode_set(std::span<const Vec<D>> wavevectors) {
  SpectralModeSet<D> set;
  set.count = wavevectors.size();
  set.wavevectors.assign(wavevectors.begin(), wavevectors.end());
  set.frames.reserve(set.count);
  for (const auto& k : set.wavevectors) {
    if (!(norm(k) > 0.0)) throw ConfigError("mode set: zero wavevector");
    set.frames.push_back(frame_of(k));
  }
  return set;
}

template <int D>
SpectralModeSet<D> sample_modes(const SpectralParams& params, RandomStream& rng) {
  params.validate();
  std::vector<Vec<D>> ks(static_cast<std::size_t>(params.modes));
  for (auto& k : ks) {
    Vec<D> dir{};
    if constexpr (D == 2) {
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      dir = {std::cos(phi), std::sin(phi)};
    } else {
      double len = 0.0;
      do {
        for (auto& g : dir) g = rng.normal();
        len = norm(dir);
      } while (len == 0.0);
      dir = (1.0 / len) * dir;
    }
    const double r = radius_from_uniform(rng.uniform(), params.cutoff, params.alpha);
    k = r * dir;
  }
  return make_mode_set<D>(ks);
}

OuAmplitudeState init_ou(std::size_t modes, int components, double theta, double dt, RandomStream& rng) {
  OuAmplitudeState st;
  st.modes = modes;
  st.components = components;
  st.theta = theta;
  st.dt = dt;
  st.xi.resize(modes * static_cast<std::size_t>(components));
  st.eta.resize(st.xi.size());
  rng.fill_normal(st.xi);
  rng.fill_normal(st.eta);
  return st;
}

void advance_ou(OuAmplitudeState& state, RandomStream& rng, const simd::KernelTable& kernels) {
  const double decay = std::exp(-state.theta * state.dt);
  const double scale = std::sqrt(-std::expm1(-2.0 * state.theta * state.dt));
  thread_local std::vector<double> noise;
  noise.resize(state.xi.size());
  rng.fill_normal(noise);
  kernels.ou_update(state.xi.data(), noise.data(), noise.size(), decay, scale);
  rng.fill_normal(noise);
  kernels.ou_update(state.eta.data(), noise.data(), noise.size(), decay, scale);
  ++state.step;
}

template <int D>
ModeSum<D>::ModeSum(std::size_t count, const simd::KernelTable& kernels)
    : count_(count), padded_(padded_size(count)), kernels_(&kernels) {
  for (int i = 0; i < D; ++i) {
    k_[i].assign(padded_, 0.0);
    u_[i].assign(padded_, 0.0);
    v_[i].assign(padded_, 0.0);
  }
}

template <int D>
void ModeSum<D>::set_mode(std::size_t m, const Vec<D>& k, const Vec<D>& u, const Vec<D>& v) {
  for (int i = 0; i < D; ++i) {
    k_[i][m] = k[i];
    u_[i][m] = u[i];
    v_[i][m] = v[i];
  }
}

template <int D>
Vec<D> ModeSum<D>::wavevector(std::size_t m) const {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = k_[i][m];
  return r;
}

template <int D>
Vec<D> ModeSum<D>::cos_amplitude(std::size_t m) const {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = u_[i][m];
  return r;
}

template <int D>
Vec<D> ModeSum<D>::sin_amplitude(std::size_t m) const {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = v_[i][m];
  return r;
}

template <int D>
simd::ModeView ModeSum<D>::view() const {
  simd::ModeView mv;
  mv.dim = D;
  mv.count = count_;
  mv.padded = padded_;
  for (int i = 0; i < D; ++i) {
    mv.k[i] = k_[i].data();
    mv.u[i] = u_[i].data();
    mv.v[i] = v_[i].data();
  }
  return mv;
}

template <int D>
Vec<D> ModeSum<D>::velocity(const Vec<D>& x) const {
  Vec<D> b{};
  kernels_->velocity(view(), x.data(), b.data());
  return b;
}

template <int D>
Vec<D> ModeSum<D>::velocity_jacobian(const Vec<D>& x, Mat<D>& jac) const {
  Vec<D> b{};
  double flat[D * D];
  kernels_->velocity_jacobian(view(), x.data(), b.data(), flat);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) jac[i][j] = flat[i * D + j];
  return b;
}

template <int D>
Vec<D> ModeSum<D>::mode_velocity(std::size_t m, const Vec<D>& x) const {
  double phase = 0.0;
  for (int j = 0; j < D; ++j) phase += k_[j][m] * x[j];
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  Vec<D> b{};
  for (int i = 0; i < D; ++i) b[i] = u_[i][m] * c + v_[i][m] * s;
  return b;
}

template <int D>
SpectralField<D>::SpectralField(SpectralModeSet<D> modes, OuAmplitudeState ou,
                                const simd::KernelTable& kernels)
    : modes_(std::move(modes)), ou_(std::move(ou)), sum_(modes_.count, kernels) {
  if (ou_.modes != modes_.count || ou_.components != ou_components(D))
    throw ConfigError("spectral field: OU state shape does not match the mode set");
  refresh_amplitudes();
}

template <int D>
void SpectralField<D>::advance(RandomStream& rng, int substeps) {
  for (int s = 0; s < substeps; ++s) advance_ou(ou_, rng, sum_.kernels());
  refresh_amplitudes();
}

template <int D>
void SpectralField<D>::refresh_amplitudes() {
  const std::size_t n = modes_.count;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const Vec<D>& f = modes_.frames[m];
    Vec<D> u{}, v{};
    if constexpr (D == 2) {
      u = (scale * ou_.xi[m]) * f;
      v = (scale * ou_.eta[m]) * f;
    } else {
      const Vec<3> xi{ou_.xi[m], ou_.xi[n + m], ou_.xi[2 * n + m]};
      const Vec<3> eta{ou_.eta[m], ou_.eta[n + m], ou_.eta[2 * n + m]};
      u = scale * cross(xi, f);
      v = scale * cross(eta, f);
    }
    sum_.set_mode(m, modes_.wavevectors[m], u, v);
  }
}

template <int D>
SpectralField<D> sample_field(const SpectralParams& params, double theta, double dt, RandomStream& mode_rng,
                              RandomStream& ou_rng, const simd::KernelTable& kernels) {
  auto modes = sample_modes<D>(params, mode_rng);
  auto ou = init_ou(modes.count, ou_components(D), theta, dt, ou_rng);
  return SpectralField<D>(std::move(modes), std::move(ou), kernels);
}

template SpectralModeSet<2> make_mode_set<2>(std::span<const Vec<2>>);
template SpectralModeSet<3> make_mode_set<3>(std::span<const Vec<3>>);
template SpectralModeSet<2> sample_modes<2>(const SpectralParams&, RandomStream&);
template SpectralModeSet<3> sample_modes<3>(const SpectralParams&, RandomStream&);
template class ModeSum<2>;
template class ModeSum<3>;
template class SpectralField<2>;
template class SpectralField<3>;
template SpectralField<2> sample_field<2>(const SpectralParams&, double, double, RandomStream&, RandomStream&,
                                          const simd::KernelTable&);
template SpectralField<3> sample_field<3>(const SpectralParams&, double, double, RandomStream&, RandomStream&,
                                          const simd::KernelTable&);

}  // namespace driftdiffuse
