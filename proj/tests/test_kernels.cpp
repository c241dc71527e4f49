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
#include <numbers>
#include <vector>

#include "driftdiffuse/rng.hpp"
#include "driftdiffuse/simd/kernels.hpp"
#include "driftdiffuse/spectral_field.hpp"

using namespace driftdiffuse;

namespace {

const simd::KernelTable* avx2_or_null() {
  return simd::cpu_has_avx2() ? simd::avx2_kernels() : nullptr;
}

template <int D>
ModeSum<D> random_sum(std::size_t count, std::uint64_t seed, const simd::KernelTable& kern) {
  RandomStream rng(seed);
  ModeSum<D> sum(count, kern);
  for (std::size_t m = 0; m < count; ++m) {
    Vec<D> k, u, v;
    for (int i = 0; i < D; ++i) {
      k[i] = 10.0 * (2.0 * rng.uniform() - 1.0);
      u[i] = rng.normal() / std::sqrt(double(count));
      v[i] = rng.normal() / std::sqrt(double(count));
    }
    sum.set_mode(m, k, u, v);
  }
  return sum;
}

template <int D>
void compare_velocity(std::size_t count) {
  const simd::KernelTable* avx = avx2_or_null();
  if (!avx) return;
  const ModeSum<D> ref = random_sum<D>(count, 11 + count, simd::scalar_kernels());
  const ModeSum<D> fast = random_sum<D>(count, 11 + count, *avx);
  RandomStream rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Vec<D> x;
    for (int i = 0; i < D; ++i) x[i] = 40.0 * (rng.uniform() - 0.5);
    Mat<D> ja, jb;
    const Vec<D> a = ref.velocity_jacobian(x, ja);
    const Vec<D> b = fast.velocity_jacobian(x, jb);
    const Vec<D> c = fast.velocity(x);
    for (int i = 0; i < D; ++i) {
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      CHECK(std::abs(a[i] - c[i]) < 1e-12);
      for (int j = 0; j < D; ++j) CHECK(std::abs(ja[i][j] - jb[i][j]) < 1e-11);
    }
  }
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar sincos matches libm") {
    std::vector<double> x(1000), s(1000), c(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = -300.0 + 0.6 * double(i) + 1e-3 * double(i % 7);
    simd::scalar_kernels().sincos(x.data(), s.data(), c.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(s[i] == std::sin(x[i]));
      CHECK(c[i] == std::cos(x[i]));
    }
  }

  TEST_CASE("avx2 sincos stays within 1e-14 of scalar") {
    const simd::KernelTable* avx = avx2_or_null();
    if (!avx) return;
    RandomStream rng(3);
    const std::size_t n = 4096;
    std::vector<double> x(n), s0(n), c0(n), s1(n), c1(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 600.0 * (rng.uniform() - 0.5);
    simd::scalar_kernels().sincos(x.data(), s0.data(), c0.data(), n);
    avx->sincos(x.data(), s1.data(), c1.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(s0[i] - s1[i]) < 1e-14);
      CHECK(std::abs(c0[i] - c1[i]) < 1e-14);
    }
  }

  TEST_CASE("box-muller block layout") {
    double u[8] = {0.1, 0.5, 0.9, 1.0, 0.25, 0.125, 0.75, 0.5};
    double z[8];
    simd::scalar_kernels().box_muller(u, z, 8);
    for (int j = 0; j < 4; ++j) {
      const double r = std::sqrt(-2.0 * std::log(u[j]));
      const double phi = 2.0 * std::numbers::pi * u[4 + j];
      CHECK(z[j] == doctest::Approx(r * std::cos(phi)).epsilon(1e-15));
      CHECK(z[4 + j] == doctest::Approx(r * std::sin(phi)).epsilon(1e-15));
    }
    CHECK(z[3] == 0.0);
    CHECK(z[7] == 0.0);
  }

  TEST_CASE("avx2 box-muller agrees with scalar") {
    const simd::KernelTable* avx = avx2_or_null();
    if (!avx) return;
    RandomStream rng(5);
    const std::size_t n = 8 * 512;
    std::vector<double> u(n), a(n), b(n);
    for (double& v : u) v = rng.uniform();
    u[0] = 0x1p-52;  // smallest uniform: largest radius
    simd::scalar_kernels().box_muller(u.data(), a.data(), n);
    avx->box_muller(u.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-13 * (1.0 + std::abs(a[i])));
  }

  TEST_CASE("ou update agrees across variants") {
    const simd::KernelTable* avx = avx2_or_null();
    if (!avx) return;
    std::vector<double> s0(1003), s1, noise(1003);
    RandomStream rng(8);
    rng.fill_normal(s0);
    rng.fill_normal(noise);
    s1 = s0;
    simd::scalar_kernels().ou_update(s0.data(), noise.data(), s0.size(), 0.9, 0.4);
    avx->ou_update(s1.data(), noise.data(), s1.size(), 0.9, 0.4);
    for (std::size_t i = 0; i < s0.size(); ++i) CHECK(std::abs(s0[i] - s1[i]) < 1e-15);
  }

  TEST_CASE("velocity and jacobian agree across variants") {
    compare_velocity<2>(1);
    compare_velocity<2>(7);
    compare_velocity<2>(1000);
    compare_velocity<3>(3);
    compare_velocity<3>(100);
  }

  TEST_CASE("analytic jacobian matches finite differences") {
    const ModeSum<2> sum = random_sum<2>(50, 21, simd::scalar_kernels());
    const Vec<2> x{0.3, -1.7};
    Mat<2> jac;
    sum.velocity_jacobian(x, jac);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
      Vec<2> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec<2> bp = sum.velocity(xp), bm = sum.velocity(xm);
      for (int i = 0; i < 2; ++i) CHECK(jac[i][j] == doctest::Approx((bp[i] - bm[i]) / (2 * h)).epsilon(1e-6));
    }
  }

  TEST_CASE("kernel selection") {
    CHECK(simd::parse_kernel_kind("scalar") == simd::KernelKind::scalar);
    CHECK(simd::parse_kernel_kind("auto") == simd::KernelKind::automatic);
    CHECK(simd::resolve(simd::KernelKind::scalar) == simd::KernelKind::scalar);
    CHECK(simd::resolve(simd::KernelKind::automatic) != simd::KernelKind::automatic);
    CHECK_THROWS_AS(simd::parse_kernel_kind("neon"), ConfigError);
  }
}
