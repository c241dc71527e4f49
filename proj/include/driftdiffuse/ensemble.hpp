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

// Monte Carlo ensembles of independent tracer paths.
//
// Path p draws its own field (modes + OU initial state) and Brownian path
// from four sub-streams keyed by (seed, p, label). Paths are grouped in fixed
// chunks of kChunkPaths; chunk accumulators are folded in ascending chunk
// order, so results are bit-identical for any worker count.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftdiffuse/integrators.hpp"
#include "driftdiffuse/parallel.hpp"
#include "driftdiffuse/rng.hpp"
#include "driftdiffuse/simd/kernels.hpp"
#include "driftdiffuse/spectral_field.hpp"
#include "driftdiffuse/types.hpp"

namespace driftdiffuse {

enum class FieldKind { spectral, zero };

FieldKind parse_field_kind(std::string_view text);
std::string_view to_string(FieldKind kind);

struct ExperimentConfig {
  int dim = 2;
  int modes = 1000;
  double cutoff_k = 10.0;
  double alpha = 0.75;
  double theta = 10.0;
  double sigma = 0.1;
  double dt = 0.01;
  double horizon = 22.0;
  std::int64_t paths = 1000;
  SchemeConfig scheme{};
  std::uint64_t seed = 1;
  int stride = 20;
  bool drift_correct = false;
  FieldKind field = FieldKind::spectral;
  simd::KernelKind kernel = simd::KernelKind::automatic;
  /// Noise is drawn on a grid `noise_substeps` times finer than dt (OU steps
  /// of dt/r, kicks summed over r draws). Lets runs at dt and dt/r share one
  /// noise realization; the law of each run is unchanged.
  int noise_substeps = 1;

  void validate() const;
  SpectralParams spectral() const { return {modes, cutoff_k, alpha}; }
  /// T / dt, validated to be an integer.
  std::int64_t steps() const;
  /// Step indices at which positions are recorded: every `stride` steps, plus
  /// the final step.
  std::vector<std::int64_t> record_steps() const;
};

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x);
  void merge(const CompensatedSum& other);
  double value() const { return sum + comp; }
  bool operator==(const CompensatedSum&) const = default;
};

/// Per-record moment sums over an ensemble of successful paths.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(int dim, std::vector<std::int64_t> record_steps, double dt);

  int dim() const { return dim_; }
  std::size_t records() const { return steps_.size(); }
  const std::vector<std::int64_t>& record_steps() const { return steps_; }
  double dt() const { return dt_; }
  double time(std::size_t k) const { return static_cast<double>(steps_[k]) * dt_; }

  /// `positions` and `drift` hold records() * dim values, record-major.
  /// `drift` is the running sum of deterministic increments.
  void add_path(std::span<const double> positions, std::span<const double> drift);
  void add_failed(std::int64_t n = 1) { failed_ += n; }
  void merge(const MomentAccumulator& other);

  std::int64_t count(std::size_t k) const { return counts_[k]; }
  std::int64_t failed() const { return failed_; }
  double sum_x(std::size_t k, int i) const { return at(k, kX + i); }
  double sum_xx(std::size_t k, int i, int j) const;
  double sum_b(std::size_t k, int i) const { return at(k, kB() + i); }
  double sum_x3(std::size_t k, int i) const { return at(k, kX3() + i); }
  double sum_x4(std::size_t k, int i) const { return at(k, kX4() + i); }

  bool operator==(const MomentAccumulator&) const = default;

 private:
  static constexpr int kX = 0;
  int kXX() const { return dim_; }
  int kB() const { return dim_ + dim_ * (dim_ + 1) / 2; }
  int kX3() const { return kB() + dim_; }
  int kX4() const { return kX3() + dim_; }
  int width() const { return kX4() + dim_; }
  double at(std::size_t k, int slot) const {
    return sums_[k * static_cast<std::size_t>(width()) + static_cast<std::size_t>(slot)].value();
  }

  int dim_ = 0;
  double dt_ = 0.0;
  std::vector<std::int64_t> steps_;
  std::vector<std::int64_t> counts_;
  std::vector<CompensatedSum> sums_;
  std::int64_t failed_ = 0;
};

/// Field-wise sums; throws ConfigError if the record grids differ.
MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b);

struct SolverStats {
  std::int64_t steps = 0;
  std::int64_t iterations = 0;
  std::int64_t steps_over_five = 0;
  int max_iterations = 0;

  void record(int iters);
  void merge(const SolverStats& other);
};

template <int D>
struct PathTrace {
  std::vector<Vec<D>> positions;  // one per record
  std::vector<Vec<D>> drift;      // running sum of B increments, per record
  bool failed = false;
  std::string failure;
};

/// The four per-path streams.
struct PathStreams {
  RandomStream modes;
  RandomStream ou_init;
  RandomStream ou_noise;
  RandomStream kicks;

  PathStreams(std::uint64_t seed, std::uint64_t path, const simd::KernelTable& kernels);
};

/// Identically zero velocity; satisfies every field concept.
template <int D>
struct ZeroField {
  Vec<D> velocity(const Vec<D>&) const { return {}; }
  Vec<D> velocity_jacobian(const Vec<D>&, Mat<D>& jac) const {
    jac = {};
    return {};
  }
  std::size_t mode_count() const { return 0; }
  Vec<D> mode_velocity(std::size_t, const Vec<D>&) const { return {}; }
  void advance(RandomStream&, int = 1) {}
};

/// Integrates one path from X(0) = 0 on the configured grid: deterministic
/// step at t_n, kick, then the field advances to t_{n+1}.
template <int D, class Field>
PathTrace<D> integrate_path(Field& field, const ExperimentConfig& cfg, RandomStream& ou_noise,
                            RandomStream& kicks, SolverStats* stats = nullptr) {
  const auto records = cfg.record_steps();
  const std::int64_t steps = cfg.steps();
  const int r = cfg.noise_substeps;
  PathTrace<D> out;
  out.positions.reserve(records.size());
  out.drift.reserve(records.size());
  Vec<D> x{};
  Vec<D> drift{};
  std::size_t next = 0;
  try {
    for (std::int64_t n = 0; n < steps; ++n) {
      const StepRecord<D> rec = step_full<D>(field, x, cfg.dt, cfg.sigma, cfg.scheme, kicks, r);
      if (stats) stats->record(rec.iterations);
      for (int i = 0; i < D; ++i) drift[i] += rec.increment[i];
      x = rec.after;
      field.advance(ou_noise, r);
      if (next < records.size() && records[next] == n + 1) {
        out.positions.push_back(x);
        out.drift.push_back(drift);
        ++next;
      }
    }
  } catch (const NonConvergence& e) {
    out.failed = true;
    out.failure = e.what();
  }
  return out;
}

/// Builds the field for path p from its mode and OU-init streams.
template <int D>
struct SpectralFactory {
  const ExperimentConfig& cfg;
  const simd::KernelTable& kernels;

  SpectralField<D> operator()(std::uint64_t, RandomStream& modes, RandomStream& ou_init) const {
    return sample_field<D>(cfg.spectral(), cfg.theta, cfg.dt / cfg.noise_substeps, modes, ou_init, kernels);
  }
};

template <int D>
struct ZeroFactory {
  ZeroField<D> operator()(std::uint64_t, RandomStream&, RandomStream&) const { return {}; }
};

template <int D, class Factory>
PathTrace<D> run_path_with(const ExperimentConfig& cfg, std::uint64_t p, const Factory& factory,
                           SolverStats* stats = nullptr) {
  const auto& kern = simd::kernels(cfg.kernel);
  PathStreams streams(cfg.seed, p, kern);
  auto field = factory(p, streams.modes, streams.ou_init);
  return integrate_path<D>(field, cfg, streams.ou_noise, streams.kicks, stats);
}

/// Path p of the configured experiment (spectral or zero field).
template <int D>
PathTrace<D> run_path(const ExperimentConfig& cfg, std::uint64_t p) {
  cfg.validate();
  if (cfg.field == FieldKind::zero) return run_path_with<D>(cfg, p, ZeroFactory<D>{});
  return run_path_with<D>(cfg, p, SpectralFactory<D>{cfg, simd::kernels(cfg.kernel)});
}

struct EnsembleResult {
  MomentAccumulator moments;
  SolverStats solver;
  double failed_fraction = 0.0;
};

/// Largest tolerated fraction of failed paths.
inline constexpr double kMaxFailedFraction = 0.01;
inline constexpr std::int64_t kChunkPaths = 64;

template <int D, class Factory>
EnsembleResult run_ensemble_with(const ExperimentConfig& cfg, const Factory& factory, int threads) {
  cfg.validate();
  const auto records = cfg.record_steps();
  struct ChunkResult {
    MomentAccumulator moments;
    SolverStats solver;
  };
  EnsembleResult result{MomentAccumulator(D, records, cfg.dt), {}, 0.0};
  ordered_chunks(
      cfg.paths, kChunkPaths, resolve_threads(threads),
      [&](std::int64_t begin, std::int64_t end) {
        ChunkResult chunk{MomentAccumulator(D, records, cfg.dt), {}};
        std::vector<double> pos(records.size() * D), drift(records.size() * D);
        for (std::int64_t p = begin; p < end; ++p) {
          PathTrace<D> trace = run_path_with<D>(cfg, static_cast<std::uint64_t>(p), factory, &chunk.solver);
          if (trace.failed) {
            chunk.moments.add_failed();
            continue;
          }
          for (std::size_t k = 0; k < records.size(); ++k)
            for (int i = 0; i < D; ++i) {
              pos[k * D + i] = trace.positions[k][i];
              drift[k * D + i] = trace.drift[k][i];
            }
          chunk.moments.add_path(pos, drift);
        }
        return chunk;
      },
      [&](ChunkResult&& chunk) {
        result.moments.merge(chunk.moments);
        result.solver.merge(chunk.solver);
      });
  result.failed_fraction = static_cast<double>(result.moments.failed()) / static_cast<double>(cfg.paths);
  if (result.failed_fraction > kMaxFailedFraction)
    throw NumericalError("ensemble: " + std::to_string(result.moments.failed()) + " of " +
                         std::to_string(cfg.paths) +
                         " paths failed (solver non-convergence); reduce dt");
  return result;
}

/// Dispatches on dim and field kind.
EnsembleResult run_ensemble(const ExperimentConfig& cfg, int threads = 0);

/// Mean deterministic increment per step, sum_B / (count * steps), taken at
/// the last record.
std::vector<double> estimate_mean_drift(const MomentAccumulator& acc);

}  // namespace driftdiffuse
