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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "driftdiffuse/simd/kernels.hpp"

namespace driftdiffuse {

/// Purpose tags for per-path sub-streams. Values are part of the
/// reproducibility contract: changing one changes every result.
enum class StreamLabel : std::uint64_t {
  modes = 0x6d6f646573ULL,
  ou_init = 0x6f75696e6974ULL,
  ou_noise = 0x6f756e6f6973ULL,
  kicks = 0x6b69636b73ULL,
  probe = 0x70726f6265ULL,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-style derivation: a keyed hash of (master, index, label). Distinct
/// inputs give unrelated seeds, identical inputs the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, StreamLabel label);

/// Child master seed for nested ensembles (outer state i -> inner paths).
std::uint64_t derive_master(std::uint64_t master, std::uint64_t index);

/// A single reproducible random stream: Philox4x32-10 keyed by the seed,
/// counter = block index. Uniforms and normals are both served from batches
/// that consume consecutive blocks, so the sequence does not depend on how
/// callers chunk their requests, nor on the kernel variant for uniforms.
class RandomStream {
 public:
  static constexpr std::size_t kBatch = 256;

  explicit RandomStream(std::uint64_t seed,
                        const simd::KernelTable& kernels = simd::scalar_kernels());

  /// Uniform on (0, 1].
  double uniform();
  double normal();
  void fill_normal(std::span<double> out);

  /// Normals handed out so far (stream-audit bookkeeping).
  std::uint64_t normals_drawn() const { return normals_drawn_; }

 private:
  void refill();

  void next_blocks(double* out);

  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  const simd::KernelTable* kernels_;
  std::array<double, kBatch> uniforms_{};
  std::array<double, kBatch> scratch_{};
  std::array<double, kBatch> normals_{};
  std::size_t next_uniform_ = kBatch;
  std::size_t next_ = kBatch;
  std::uint64_t normals_drawn_ = 0;
};

}  // namespace driftdiffuse
