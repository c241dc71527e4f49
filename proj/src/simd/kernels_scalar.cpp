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

#include <cmath>
#include <cstdint>
#include <numbers>

#include "driftdiffuse/simd/kernels.hpp"

namespace driftdiffuse::simd {
namespace {

void philox_uniforms(const std::uint32_t* key, std::uint64_t first_block, double* out, std::size_t n_blocks) {
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::uint64_t blk = first_block + b;
    const auto r = philox4x32_10({static_cast<std::uint32_t>(blk), static_cast<std::uint32_t>(blk >> 32), 0, 0},
                                 {key[0], key[1]});
    const std::uint64_t w0 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    out[2 * b] = static_cast<double>((w0 >> 12) + 1) * 0x1p-52;
    out[2 * b + 1] = static_cast<double>((w1 >> 12) + 1) * 0x1p-52;
  }
}

template <int D>
void velocity_impl(const ModeView& modes, const double* x, double* b) {
  double acc[D] = {};
  for (std::size_t m = 0; m < modes.count; ++m) {
    double phase = 0.0;
    for (int j = 0; j < D; ++j) phase += modes.k[j][m] * x[j];
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    for (int i = 0; i < D; ++i) acc[i] += modes.u[i][m] * c + modes.v[i][m] * s;
  }
  for (int i = 0; i < D; ++i) b[i] = acc[i];
}

template <int D>
void velocity_jacobian_impl(const ModeView& modes, const double* x, double* b, double* jac) {
  double acc[D] = {};
  double jacc[D * D] = {};
  for (std::size_t m = 0; m < modes.count; ++m) {
    double phase = 0.0;
    for (int j = 0; j < D; ++j) phase += modes.k[j][m] * x[j];
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    for (int i = 0; i < D; ++i) {
      acc[i] += modes.u[i][m] * c + modes.v[i][m] * s;
      const double g = modes.v[i][m] * c - modes.u[i][m] * s;
      for (int j = 0; j < D; ++j) jacc[i * D + j] += g * modes.k[j][m];
    }
  }
  for (int i = 0; i < D; ++i) b[i] = acc[i];
  for (int i = 0; i < D * D; ++i) jac[i] = jacc[i];
}

void velocity(const ModeView& modes, const double* x, double* b) {
  if (modes.dim == 2)
    velocity_impl<2>(modes, x, b);
  else
    velocity_impl<3>(modes, x, b);
}

void velocity_jacobian(const ModeView& modes, const double* x, double* b, double* jac) {
  if (modes.dim == 2)
    velocity_jacobian_impl<2>(modes, x, b, jac);
  else
    velocity_jacobian_impl<3>(modes, x, b, jac);
}

void box_muller(const double* u, double* z, std::size_t n) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t blk = 0; blk < n; blk += kBoxMullerBlock) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double r = std::sqrt(-2.0 * std::log(u[blk + j]));
      const double phi = two_pi * u[blk + 4 + j];
      z[blk + j] = r * std::cos(phi);
      z[blk + 4 + j] = r * std::sin(phi);
    }
  }
}

void ou_update(double* state, const double* noise, std::size_t n, double decay, double scale) {
  for (std::size_t i = 0; i < n; ++i) state[i] = decay * state[i] + scale * noise[i];
}

void sincos(const double* x, double* s, double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", philox_uniforms, velocity, velocity_jacobian, box_muller, ou_update, sincos};
  return table;
}

}  // namespace driftdiffuse::simd
