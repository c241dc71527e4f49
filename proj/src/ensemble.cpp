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

#include "driftdiffuse/ensemble.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace driftdiffuse {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DRIFTDIFFUSE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FieldKind parse_field_kind(std::string_view text) {
  if (text == "spectral") return FieldKind::spectral;
  if (text == "zero") return FieldKind::zero;
  throw ConfigError("field: expected spectral|zero, got '" + std::string(text) + "'");
}

std::string_view to_string(FieldKind kind) { return kind == FieldKind::spectral ? "spectral" : "zero"; }

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim: must be 2 or 3 (got " + std::to_string(dim) + ")");
  spectral().validate();
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("theta: must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma: must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt: must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon: must be > 0");
  const double ratio = horizon / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
    throw ConfigError("horizon: horizon / dt must be a positive integer (got " + std::to_string(ratio) + ")");
  if (paths < 1) throw ConfigError("paths: must be >= 1");
  if (stride < 1) throw ConfigError("stride: must be >= 1");
  if (noise_substeps < 1) throw ConfigError("noise_substeps: must be >= 1");
  scheme.validate(dim);
}

std::int64_t ExperimentConfig::steps() const { return static_cast<std::int64_t>(std::llround(horizon / dt)); }

std::vector<std::int64_t> ExperimentConfig::record_steps() const {
  std::vector<std::int64_t> out;
  const std::int64_t n = steps();
  for (std::int64_t s = stride; s <= n; s += stride) out.push_back(s);
  if (out.empty() || out.back() != n) out.push_back(n);
  return out;
}

void CompensatedSum::add(double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

void CompensatedSum::merge(const CompensatedSum& other) {
  add(other.sum);
  comp += other.comp;
}

MomentAccumulator::MomentAccumulator(int dim, std::vector<std::int64_t> record_steps, double dt)
    : dim_(dim), dt_(dt), steps_(std::move(record_steps)) {
  counts_.assign(steps_.size(), 0);
  sums_.assign(steps_.size() * static_cast<std::size_t>(width()), CompensatedSum{});
}

double MomentAccumulator::sum_xx(std::size_t k, int i, int j) const {
  if (i > j) std::swap(i, j);
  // upper-triangle, row-major
  const int idx = i * dim_ - i * (i - 1) / 2 + (j - i);
  return at(k, kXX() + idx);
}

void MomentAccumulator::add_path(std::span<const double> positions, std::span<const double> drift) {
  const std::size_t d = static_cast<std::size_t>(dim_);
  if (positions.size() != records() * d || drift.size() != records() * d)
    throw ConfigError("moment accumulator: path record count mismatch");
  const std::size_t w = static_cast<std::size_t>(width());
  for (std::size_t k = 0; k < records(); ++k) {
    CompensatedSum* row = &sums_[k * w];
    const double* x = &positions[k * d];
    const double* b = &drift[k * d];
    int idx = 0;
    for (int i = 0; i < dim_; ++i) {
      row[kX + i].add(x[i]);
      for (int j = i; j < dim_; ++j) row[kXX() + idx++].add(x[i] * x[j]);
      row[kB() + i].add(b[i]);
      const double x2 = x[i] * x[i];
      row[kX3() + i].add(x2 * x[i]);
      row[kX4() + i].add(x2 * x2);
    }
    ++counts_[k];
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.dim_ != dim_ || other.steps_ != steps_ || other.dt_ != dt_)
    throw ConfigError("moment accumulator: cannot merge accumulators on different record grids");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i].merge(other.sums_[i]);
  failed_ += other.failed_;
}

MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
  MomentAccumulator out = a;
  out.merge(b);
  return out;
}

void SolverStats::record(int iters) {
  ++steps;
  iterations += iters;
  if (iters > 5) ++steps_over_five;
  max_iterations = std::max(max_iterations, iters);
}

void SolverStats::merge(const SolverStats& other) {
  steps += other.steps;
  iterations += other.iterations;
  steps_over_five += other.steps_over_five;
  max_iterations = std::max(max_iterations, other.max_iterations);
}

PathStreams::PathStreams(std::uint64_t seed, std::uint64_t path, const simd::KernelTable& kernels)
    : modes(derive_seed(seed, path, StreamLabel::modes), kernels),
      ou_init(derive_seed(seed, path, StreamLabel::ou_init), kernels),
      ou_noise(derive_seed(seed, path, StreamLabel::ou_noise), kernels),
      kicks(derive_seed(seed, path, StreamLabel::kicks), kernels) {}

EnsembleResult run_ensemble(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto& kern = simd::kernels(cfg.kernel);
  if (cfg.dim == 2) {
    if (cfg.field == FieldKind::zero) return run_ensemble_with<2>(cfg, ZeroFactory<2>{}, threads);
    return run_ensemble_with<2>(cfg, SpectralFactory<2>{cfg, kern}, threads);
  }
  if (cfg.field == FieldKind::zero) return run_ensemble_with<3>(cfg, ZeroFactory<3>{}, threads);
  return run_ensemble_with<3>(cfg, SpectralFactory<3>{cfg, kern}, threads);
}

std::vector<double> estimate_mean_drift(const MomentAccumulator& acc) {
  std::vector<double> out(static_cast<std::size_t>(acc.dim()), 0.0);
  if (acc.records() == 0) return out;
  const std::size_t k = acc.records() - 1;
  const double denom = static_cast<double>(acc.count(k)) * static_cast<double>(acc.record_steps()[k]);
  if (denom == 0.0) return out;
  for (int i = 0; i < acc.dim(); ++i) out[static_cast<std::size_t>(i)] = acc.sum_b(k, i) / denom;
  return out;
}

}  // namespace driftdiffuse
