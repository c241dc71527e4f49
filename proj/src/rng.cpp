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

#include "driftdiffuse/rng.hpp"

#include <algorithm>

namespace driftdiffuse {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, StreamLabel label) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ index);
  return splitmix64(h ^ static_cast<std::uint64_t>(label));
}

std::uint64_t derive_master(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ 0xA5A5A5A55A5A5A5AULL) + index);
}

RandomStream::RandomStream(std::uint64_t seed, const simd::KernelTable& kernels)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, kernels_(&kernels) {}

void RandomStream::next_blocks(double* out) {
  kernels_->philox_uniforms(key_.data(), block_, out, kBatch / 2);
  block_ += kBatch / 2;
}

double RandomStream::uniform() {
  if (next_uniform_ == kBatch) {
    next_blocks(uniforms_.data());
    next_uniform_ = 0;
  }
  return uniforms_[next_uniform_++];
}

void RandomStream::refill() {
  next_blocks(scratch_.data());
  kernels_->box_muller(scratch_.data(), normals_.data(), kBatch);
  next_ = 0;
}

double RandomStream::normal() {
  if (next_ == kBatch) refill();
  ++normals_drawn_;
  return normals_[next_++];
}

void RandomStream::fill_normal(std::span<double> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (next_ == kBatch) refill();
    const std::size_t take = std::min(kBatch - next_, out.size() - done);
    std::copy_n(normals_.begin() + static_cast<std::ptrdiff_t>(next_), take,
                out.begin() + static_cast<std::ptrdiff_t>(done));
    next_ += take;
    done += take;
  }
  normals_drawn_ += out.size();
}

}  // namespace driftdiffuse
