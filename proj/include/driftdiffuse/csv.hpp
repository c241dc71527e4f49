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

// CSV writers for every output kind. Numbers are written at 17 significant
// digits; lines starting with '#' are comments (run summaries) and are
// skipped by read_csv.

#include <iosfwd>
#include <string>
#include <vector>

#include "driftdiffuse/analysis.hpp"
#include "driftdiffuse/spectral_field.hpp"

namespace driftdiffuse {

/// t, D11, D11_se, D22, D22_se, [D33, D33_se,] D12, count
std::string diffusivity_csv(const DiffusivityCurve& curve);

/// t, count, sumX_1..d, sumXX_ij (upper triangle), sumB_1..d, failed
std::string moments_csv(const MomentAccumulator& acc);

/// scheme, dt, abs_error, stderr, included_in_fit, D11
std::string convergence_csv(const ConvergenceResult& result);

/// n, t, variance, floor
std::string decay_csv(const DecayCurve& curve);

/// sigma, kappa, D11, D11_se, count
std::string residual_csv(const ResidualResult& result);

/// m, k_1..k_d, xi components, eta components
template <int D>
std::string modes_csv(const SpectralField<D>& field);

struct CsvTable {
  std::vector<std::string> header;
  /// Cells as text; numeric_column() converts.
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

/// Parses comma-separated text with one header line; throws IoError on
/// ragged rows.
CsvTable read_csv(const std::string& text);

}  // namespace driftdiffuse
