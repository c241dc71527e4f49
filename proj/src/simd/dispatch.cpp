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

#include <string>

#include "driftdiffuse/simd/kernels.hpp"
#include "driftdiffuse/types.hpp"

namespace driftdiffuse::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return has;
#else
  return false;
#endif
}

KernelKind resolve(KernelKind kind) {
  if (kind != KernelKind::automatic) return kind;
  return (avx2_kernels() != nullptr && cpu_has_avx2()) ? KernelKind::avx2 : KernelKind::scalar;
}

const KernelTable& kernels(KernelKind kind) {
  switch (resolve(kind)) {
    case KernelKind::avx2:
      if (avx2_kernels() == nullptr || !cpu_has_avx2())
        throw ConfigError("kernel: avx2 requested but not supported by this build or CPU");
      return *avx2_kernels();
    default:
      return scalar_kernels();
  }
}

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "auto") return KernelKind::automatic;
  if (text == "scalar") return KernelKind::scalar;
  if (text == "avx2") return KernelKind::avx2;
  throw ConfigError("kernel: expected one of auto|scalar|avx2, got '" + std::string(text) + "'");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::scalar:
      return "scalar";
    case KernelKind::avx2:
      return "avx2";
    default:
      return "auto";
  }
}

}  // namespace driftdiffuse::simd
