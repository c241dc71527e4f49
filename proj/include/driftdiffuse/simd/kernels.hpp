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

// Data-parallel inner loops. Each kernel has a portable scalar reference
// and, on x86-64, an AVX2+FMA variant selected at runtime. The variants are
// not bit-identical (different summation order, polynomial sincos/log); the
// equivalence tests pin the allowed drift.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace driftdiffuse::simd {

/// Structure-of-arrays view of a spectral mode set. Arrays hold `padded`
/// entries; lanes past `count` must carry zero amplitudes.
struct ModeView {
  int dim = 0;
  std::size_t count = 0;
  std::size_t padded = 0;
  const double* k[3] = {nullptr, nullptr, nullptr};
  const double* u[3] = {nullptr, nullptr, nullptr};  // cosine amplitudes
  const double* v[3] = {nullptr, nullptr, nullptr};  // sine amplitudes
};

/// Lane width every mode array is padded to.
inline constexpr std::size_t kModePadding = 4;

/// Uniforms consumed (and normals produced) per Box-Muller block.
inline constexpr std::size_t kBoxMullerBlock = 8;

struct KernelTable {
  const char* name;
  /// Philox4x32-10 blocks first_block .. first_block + n_blocks - 1 under
  /// `key`, counter (lo32(block), hi32(block), 0, 0). Block j yields
  /// out[2j] from words (r0, r1) and out[2j+1] from (r2, r3), each mapped to
  /// ((w >> 12) + 1) * 2^-52 in (0, 1]. Bit-identical across variants.
  void (*philox_uniforms)(const std::uint32_t* key, std::uint64_t first_block, double* out,
                          std::size_t n_blocks);
  /// b = sum_m u_m cos(k_m . x) + v_m sin(k_m . x)
  void (*velocity)(const ModeView& modes, const double* x, double* b);
  /// b as above and jac[i*dim + j] = d b_i / d x_j.
  void (*velocity_jacobian)(const ModeView& modes, const double* x, double* b, double* jac);
  /// Blockwise Box-Muller: for each block of 8 uniforms in (0,1],
  /// r_j = sqrt(-2 log u[j]), phi_j = 2 pi u[4+j], z[j] = r_j cos phi_j,
  /// z[4+j] = r_j sin phi_j, j = 0..3. Sizes must be multiples of 8.
  void (*box_muller)(const double* u, double* z, std::size_t n);
  /// state[i] = decay * state[i] + scale * noise[i]
  void (*ou_update)(double* state, const double* noise, std::size_t n, double decay, double scale);
  /// Elementwise sin/cos, exposed for the equivalence tests.
  void (*sincos)(const double* x, double* s, double* c, std::size_t n);
};

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

/// One Philox4x32-10 block (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

enum class KernelKind { automatic, scalar, avx2 };

const KernelTable& scalar_kernels();

/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

/// `automatic` resolves to avx2 when both the build and the CPU support it.
KernelKind resolve(KernelKind kind);

/// Throws ConfigError when avx2 is requested but unavailable.
const KernelTable& kernels(KernelKind kind);

KernelKind parse_kernel_kind(std::string_view text);
std::string_view to_string(KernelKind kind);

}  // namespace driftdiffuse::simd
