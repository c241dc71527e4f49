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

#include "driftdiffuse/simd/kernels.hpp"

#if defined(DRIFTDIFFUSE_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <numbers>

namespace driftdiffuse::simd {
namespace {

// Cody-Waite split of pi/2; with FMA the first two reductions are exact for
// |x| well past the largest phases seen in practice.
constexpr double kPio2Hi = 1.5707963267948966;
constexpr double kPio2Mid = 6.123233995736766e-17;
constexpr double kPio2Lo = -1.4973849048591698e-33;
constexpr double kTwoOverPi = 0.63661977236758134308;

// Beyond this the reduction loses bits; such lanes go through libm.
constexpr double kReductionLimit = 1.0e9;

// Minimax coefficients on [-pi/4, pi/4] (Cephes).
constexpr double kSin[6] = {1.58962301576546568060E-10, -2.50507477628578072866E-8,
                            2.75573136213857245213E-6,  -1.98412698295895385996E-4,
                            8.33333333332211858878E-3,  -1.66666666666666307295E-1};
constexpr double kCos[6] = {-1.13585365213876817300E-11, 2.08757008419747316778E-9,
                            -2.75573141792967388112E-7,  2.48015872888517045348E-5,
                            -1.38888888888730564116E-3,  4.16666666666665929218E-2};

// Philox on 4 blocks per vector; each 64-bit lane carries one 32-bit word.
// Two vectors are processed together to hide the multiply latency.
struct PhiloxLanes {
  __m256i c0, c1, c2, c3;
};

inline PhiloxLanes philox_start(std::uint64_t blk) {
  const __m256i ctr =
      _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(blk)), _mm256_set_epi64x(3, 2, 1, 0));
  return {_mm256_and_si256(ctr, _mm256_set1_epi64x(0xffffffffLL)), _mm256_srli_epi64(ctr, 32),
          _mm256_setzero_si256(), _mm256_setzero_si256()};
}

inline void philox_round(PhiloxLanes& s, __m256i k0, __m256i k1) {
  const __m256i lo32 = _mm256_set1_epi64x(0xffffffffLL);
  const __m256i p0 = _mm256_mul_epu32(s.c0, _mm256_set1_epi64x(kPhiloxM0));
  const __m256i p1 = _mm256_mul_epu32(s.c2, _mm256_set1_epi64x(kPhiloxM1));
  const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), s.c1), k0);
  const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), s.c3), k1);
  s.c1 = _mm256_and_si256(p1, lo32);
  s.c3 = _mm256_and_si256(p0, lo32);
  s.c0 = n0;
  s.c2 = n2;
}

// ((w >> 12) + 1) * 2^-52; the int -> double step is exact below 2^52.
inline __m256d philox_to_unit(__m256i hi, __m256i lo) {
  const __m256d two52 = _mm256_set1_pd(0x1p52);
  const __m256i w = _mm256_srli_epi64(_mm256_or_si256(_mm256_slli_epi64(hi, 32), lo), 12);
  const __m256d d = _mm256_sub_pd(_mm256_or_pd(_mm256_castsi256_pd(w), two52), two52);
  return _mm256_mul_pd(_mm256_add_pd(d, _mm256_set1_pd(1.0)), _mm256_set1_pd(0x1p-52));
}

inline void philox_store(const PhiloxLanes& s, double* out) {
  const __m256d ua = philox_to_unit(s.c1, s.c0);
  const __m256d uc = philox_to_unit(s.c3, s.c2);
  const __m256d lo = _mm256_unpacklo_pd(ua, uc);
  const __m256d hi = _mm256_unpackhi_pd(ua, uc);
  _mm256_storeu_pd(out, _mm256_permute2f128_pd(lo, hi, 0x20));
  _mm256_storeu_pd(out + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
}

void philox_uniforms(const std::uint32_t* key, std::uint64_t first_block, double* out, std::size_t n_blocks) {
  const __m256i lo32 = _mm256_set1_epi64x(0xffffffffLL);
  const __m256i w0 = _mm256_set1_epi64x(kPhiloxW0);
  const __m256i w1 = _mm256_set1_epi64x(kPhiloxW1);
  std::size_t b = 0;
  for (; b + 8 <= n_blocks; b += 8) {
    PhiloxLanes a = philox_start(first_block + b);
    PhiloxLanes c = philox_start(first_block + b + 4);
    __m256i k0 = _mm256_set1_epi64x(key[0]);
    __m256i k1 = _mm256_set1_epi64x(key[1]);
    for (int round = 0; round < 10; ++round) {
      philox_round(a, k0, k1);
      philox_round(c, k0, k1);
      k0 = _mm256_and_si256(_mm256_add_epi64(k0, w0), lo32);
      k1 = _mm256_and_si256(_mm256_add_epi64(k1, w1), lo32);
    }
    philox_store(a, out + 2 * b);
    philox_store(c, out + 2 * b + 8);
  }
  if (b < n_blocks) scalar_kernels().philox_uniforms(key, first_block + b, out + 2 * b, n_blocks - b);
}

inline __m256d horner(const double (&coef)[6], __m256d z) {
  __m256d acc = _mm256_set1_pd(coef[0]);
  for (int i = 1; i < 6; ++i) acc = _mm256_fmadd_pd(acc, z, _mm256_set1_pd(coef[i]));
  return acc;
}

inline void sincos_pd(__m256d x, __m256d& sin_out, __m256d& cos_out) {
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);
  // sin r = r + r^3 P(r^2); cos r = 1 - r^2/2 + r^4 Q(r^2)
  const __m256d sr = _mm256_fmadd_pd(_mm256_mul_pd(r, z), horner(kSin, z), r);
  const __m256d cr = _mm256_fmadd_pd(_mm256_mul_pd(z, z), horner(kCos, z),
                                     _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0)));

  // Low integer bits of q: quadrant selection.
  const __m256i qi = _mm256_castpd_si256(_mm256_add_pd(q, _mm256_set1_pd(0x1.8p52)));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
  const __m256d sin_sign = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(qi, two), 62));
  const __m256d cos_sign =
      _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(_mm256_add_epi64(qi, one), two), 62));

  sin_out = _mm256_xor_pd(_mm256_blendv_pd(sr, cr, swap), sin_sign);
  cos_out = _mm256_xor_pd(_mm256_blendv_pd(cr, sr, swap), cos_sign);

  const __m256d big = _mm256_cmp_pd(_mm256_andnot_pd(_mm256_set1_pd(-0.0), x),
                                    _mm256_set1_pd(kReductionLimit), _CMP_GT_OQ);
  if (_mm256_movemask_pd(big) != 0) {
    alignas(32) double xs[4], ss[4], cs[4];
    _mm256_store_pd(xs, x);
    _mm256_store_pd(ss, sin_out);
    _mm256_store_pd(cs, cos_out);
    for (int i = 0; i < 4; ++i) {
      if (std::fabs(xs[i]) > kReductionLimit) {
        ss[i] = std::sin(xs[i]);
        cs[i] = std::cos(xs[i]);
      }
    }
    sin_out = _mm256_load_pd(ss);
    cos_out = _mm256_load_pd(cs);
  }
}

// Natural log for positive normal doubles: x = m 2^e with m in [sqrt(1/2), sqrt(2)),
// log m = 2 atanh((m-1)/(m+1)) summed as an odd series.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256d two52 = _mm256_set1_pd(0x1p52);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_castpd_si256(two52))), two52);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d high = _mm256_cmp_pd(m, _mm256_set1_pd(std::numbers::sqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), high);
  e = _mm256_add_pd(e, _mm256_and_pd(high, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d series = _mm256_set1_pd(1.0 / 21.0);
  for (int k = 9; k >= 0; --k)
    series = _mm256_fmadd_pd(series, s2, _mm256_set1_pd(1.0 / (2.0 * k + 1.0)));
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(s, s), series);

  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  return _mm256_fmadd_pd(e, _mm256_set1_pd(ln2_hi),
                         _mm256_fmadd_pd(e, _mm256_set1_pd(ln2_lo), log_m));
}

inline double hsum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

template <int D>
inline __m256d phase_at(const ModeView& modes, const __m256d (&xv)[D], std::size_t m) {
  __m256d phase = _mm256_mul_pd(_mm256_loadu_pd(modes.k[0] + m), xv[0]);
  for (int j = 1; j < D; ++j) phase = _mm256_fmadd_pd(_mm256_loadu_pd(modes.k[j] + m), xv[j], phase);
  return phase;
}

template <int D>
void velocity_impl(const ModeView& modes, const double* x, double* b) {
  __m256d xv[D];
  for (int j = 0; j < D; ++j) xv[j] = _mm256_set1_pd(x[j]);
  __m256d acc[D];
  for (int i = 0; i < D; ++i) acc[i] = _mm256_setzero_pd();
  for (std::size_t m = 0; m < modes.padded; m += 4) {
    __m256d s, c;
    sincos_pd(phase_at<D>(modes, xv, m), s, c);
    for (int i = 0; i < D; ++i) {
      acc[i] = _mm256_fmadd_pd(_mm256_loadu_pd(modes.u[i] + m), c, acc[i]);
      acc[i] = _mm256_fmadd_pd(_mm256_loadu_pd(modes.v[i] + m), s, acc[i]);
    }
  }
  for (int i = 0; i < D; ++i) b[i] = hsum(acc[i]);
}

template <int D>
void velocity_jacobian_impl(const ModeView& modes, const double* x, double* b, double* jac) {
  __m256d xv[D];
  for (int j = 0; j < D; ++j) xv[j] = _mm256_set1_pd(x[j]);
  __m256d acc[D];
  __m256d jacc[D * D];
  for (int i = 0; i < D; ++i) acc[i] = _mm256_setzero_pd();
  for (int i = 0; i < D * D; ++i) jacc[i] = _mm256_setzero_pd();
  for (std::size_t m = 0; m < modes.padded; m += 4) {
    __m256d s, c;
    sincos_pd(phase_at<D>(modes, xv, m), s, c);
    __m256d kv[D];
    for (int j = 0; j < D; ++j) kv[j] = _mm256_loadu_pd(modes.k[j] + m);
    for (int i = 0; i < D; ++i) {
      const __m256d u = _mm256_loadu_pd(modes.u[i] + m);
      const __m256d v = _mm256_loadu_pd(modes.v[i] + m);
      acc[i] = _mm256_fmadd_pd(u, c, acc[i]);
      acc[i] = _mm256_fmadd_pd(v, s, acc[i]);
      const __m256d g = _mm256_fnmadd_pd(u, s, _mm256_mul_pd(v, c));
      for (int j = 0; j < D; ++j) jacc[i * D + j] = _mm256_fmadd_pd(g, kv[j], jacc[i * D + j]);
    }
  }
  for (int i = 0; i < D; ++i) b[i] = hsum(acc[i]);
  for (int i = 0; i < D * D; ++i) jac[i] = hsum(jacc[i]);
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
  const __m256d two_pi = _mm256_set1_pd(2.0 * std::numbers::pi);
  const __m256d minus_two = _mm256_set1_pd(-2.0);
  for (std::size_t blk = 0; blk < n; blk += kBoxMullerBlock) {
    const __m256d u1 = _mm256_loadu_pd(u + blk);
    const __m256d u2 = _mm256_loadu_pd(u + blk + 4);
    const __m256d r = _mm256_sqrt_pd(_mm256_mul_pd(minus_two, log_pd(u1)));
    __m256d s, c;
    sincos_pd(_mm256_mul_pd(two_pi, u2), s, c);
    _mm256_storeu_pd(z + blk, _mm256_mul_pd(r, c));
    _mm256_storeu_pd(z + blk + 4, _mm256_mul_pd(r, s));
  }
}

void ou_update(double* state, const double* noise, std::size_t n, double decay, double scale) {
  const __m256d dv = _mm256_set1_pd(decay);
  const __m256d sv = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d st = _mm256_loadu_pd(state + i);
    const __m256d nz = _mm256_loadu_pd(noise + i);
    _mm256_storeu_pd(state + i, _mm256_fmadd_pd(dv, st, _mm256_mul_pd(sv, nz)));
  }
  for (; i < n; ++i) state[i] = std::fma(decay, state[i], scale * noise[i]);
}

void sincos(const double* x, double* s, double* c, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d sv, cv;
    sincos_pd(_mm256_loadu_pd(x + i), sv, cv);
    _mm256_storeu_pd(s + i, sv);
    _mm256_storeu_pd(c + i, cv);
  }
  if (i < n) {
    alignas(32) double xs[4] = {0.0, 0.0, 0.0, 0.0}, ss[4], cs[4];
    for (std::size_t j = i; j < n; ++j) xs[j - i] = x[j];
    __m256d sv, cv;
    sincos_pd(_mm256_load_pd(xs), sv, cv);
    _mm256_store_pd(ss, sv);
    _mm256_store_pd(cs, cv);
    for (std::size_t j = i; j < n; ++j) {
      s[j] = ss[j - i];
      c[j] = cs[j - i];
    }
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2", philox_uniforms, velocity, velocity_jacobian, box_muller, ou_update, sincos};
  return &table;
}

}  // namespace driftdiffuse::simd

#else

namespace driftdiffuse::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace driftdiffuse::simd

#endif
