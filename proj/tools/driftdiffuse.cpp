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

// driftdiffuse: effective diffusivity of passive tracers in random
// divergence-free flows.
//
//   driftdiffuse [--threads N] <simulate|convergence|decay|residual|fieldcheck>
//                [--config FILE] [--out DIR] [--<key> VALUE ...] [command options]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical abort (or a
// failed field check), 3 I/O error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "driftdiffuse/analysis.hpp"
#include "driftdiffuse/config.hpp"
#include "driftdiffuse/csv.hpp"
#include "driftdiffuse/diagnostics.hpp"

namespace fs = std::filesystem;
using namespace driftdiffuse;

namespace {

constexpr const char* kConfigKeys[] = {"dim",   "modes",  "cutoff_k",      "alpha",  "theta",          "sigma",
                                       "dt",    "horizon", "paths",        "scheme", "seed",           "stride",
                                       "drift_correct",    "field",        "kernel", "noise_substeps", "solver",
                                       "tol",   "max_iter", "fd_step"};

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::map<std::string, std::string> keys;
  std::map<std::string, CLI::Option*> key_opts;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "key = value config file or a previous run's manifest");
  cmd->add_option("--out", args.out, "output directory (created if missing)")->capture_default_str();
  for (const char* key : kConfigKeys)
    args.key_opts[key] = cmd->add_option(std::string("--") + key, args.keys[key], std::string("override '") + key + "'");
}

struct Resolved {
  ExperimentConfig cfg;
  std::map<std::string, std::string> run;
};

Resolved resolve(const CommonArgs& args, const std::string& command) {
  std::vector<KeyValue> overrides;
  for (const char* key : kConfigKeys)
    if (args.key_opts.at(key)->count() > 0) overrides.push_back({key, args.keys.at(key), 0});
  ParsedConfig parsed = parse_config_file(args.config, overrides);
  if (auto it = parsed.run.find("command"); it != parsed.run.end() && it->second != command)
    throw ConfigError("run.command: manifest was written by '" + it->second + "', not '" + command + "'");
  return {parsed.experiment, parsed.run};
}

// Flag value if given, else the manifest's run.<name>, else the fallback.
std::string pick(const CLI::Option* opt, const std::string& flag_value, const std::map<std::string, std::string>& run,
                 const std::string& name, const std::string& fallback) {
  if (opt->count() > 0) return flag_value;
  if (auto it = run.find(name); it != run.end()) return it->second;
  return fallback;
}

int parse_positive_int(const std::string& text, const std::string& key) {
  const std::vector<double> v = parse_double_list(text, key);
  if (v.size() != 1 || v[0] < 1 || v[0] != static_cast<double>(static_cast<int>(v[0])))
    throw ConfigError(key + ": expected a positive integer, got '" + text + "'");
  return static_cast<int>(v[0]);
}

std::vector<SchemeKind> parse_scheme_list(const std::string& text) {
  std::vector<SchemeKind> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_scheme_kind(item));
  if (out.empty()) throw ConfigError("compare: empty scheme list");
  return out;
}

std::string scheme_list(const std::vector<SchemeKind>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::string(to_string(s[i]));
  return out;
}

class Output {
 public:
  Output(const std::string& dir, const std::string& command, const ExperimentConfig& cfg)
      : dir_(dir), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    manifest_.config = cfg;
    manifest_.command = command;
    manifest_.version = DRIFTDIFFUSE_VERSION;
  }

  void write(const std::string& name, const std::string& content) {
    write_text_file(dir_ / name, content);
    manifest_.outputs.push_back(name);
  }
  void param(const std::string& key, const std::string& value) { manifest_.parameters.emplace_back(key, value); }
  void failed(std::int64_t n) { manifest_.failed_paths = n; }

  void finish() {
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text_file(dir_ / "manifest.txt", serialize_manifest(manifest_));
    std::cout << "wrote";
    for (const auto& o : manifest_.outputs) std::cout << " " << (dir_ / o).string();
    std::cout << " " << (dir_ / "manifest.txt").string() << "\n";
  }

 private:
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

int cmd_simulate(const CommonArgs& args, int threads) {
  const Resolved r = resolve(args, "simulate");
  Output out(args.out, "simulate", r.cfg);
  const EnsembleResult ens = run_ensemble(r.cfg, threads);
  const auto variant = r.cfg.drift_correct ? EstimatorVariant::corrected : EstimatorVariant::raw;
  const DiffusivityCurve curve = effective_diffusivity(ens.moments, variant);
  out.write("diffusivity.csv", diffusivity_csv(curve));
  out.write("moments.csv", moments_csv(ens.moments));
  out.failed(ens.moments.failed());
  out.finish();

  const std::size_t k = curve.records() - 1;
  std::printf("t = %g  D11 = %.6g +- %.2g  D22 = %.6g +- %.2g  paths = %lld (failed %lld)\n", curve.times[k],
              curve.entry(k, 0, 0), curve.stderr_of(k, 0), curve.entry(k, 1, 1), curve.stderr_of(k, 1),
              static_cast<long long>(curve.counts[k]), static_cast<long long>(ens.moments.failed()));
  if (ens.solver.steps > 0)
    std::printf("solver: %.3f iterations/step, max %d, %.4f%% of steps over 5\n",
                static_cast<double>(ens.solver.iterations) / static_cast<double>(ens.solver.steps),
                ens.solver.max_iterations,
                100.0 * static_cast<double>(ens.solver.steps_over_five) / static_cast<double>(ens.solver.steps));
  return 0;
}

int cmd_convergence(const CommonArgs& args, int threads, const CLI::Option* dt_opt, const std::string& dt_text,
                    const CLI::Option* cmp_opt, const std::string& cmp_text, const CLI::Option* ref_opt,
                    const std::string& ref_text) {
  const Resolved r = resolve(args, "convergence");
  ConvergenceConfig cc;
  cc.base = r.cfg;
  const std::string dts = pick(dt_opt, dt_text, r.run, "dt_list", "0.0125,0.025,0.05,0.1");
  cc.dt_list = parse_double_list(dts, "dt_list");
  const std::string cmp = pick(cmp_opt, cmp_text, r.run, "compare", std::string(to_string(r.cfg.scheme.kind)));
  cc.schemes = parse_scheme_list(cmp);
  const std::string ref = pick(ref_opt, ref_text, r.run, "dt_ref", "0");
  cc.dt_ref = parse_double_list(ref, "dt_ref").at(0);

  Output out(args.out, "convergence", r.cfg);
  out.param("dt_list", format_double_list(cc.dt_list));
  out.param("compare", scheme_list(cc.schemes));
  out.param("dt_ref", format_double(cc.dt_ref));
  const ConvergenceResult res = convergence_study(cc, threads);
  out.write("convergence.csv", convergence_csv(res));
  out.failed(res.failed);
  out.finish();

  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("reference dt = %g  D11 = %.6g +- %.2g\n", res.dt_ref, res.d11_ref, res.d11_ref_se);
  for (const auto& p : res.points)
    std::printf("%-10s dt = %-8g D11 = %.6g  |error| = %.3g +- %.2g%s\n", std::string(to_string(p.scheme)).c_str(),
                p.dt, p.d11, p.abs_error, p.std_err, p.included_in_fit ? "" : "  (excluded)");
  for (SchemeKind s : cc.schemes) {
    const auto fit = res.fit(s);
    if (fit)
      std::printf("slope[%s] = %.4f\n", std::string(to_string(s)).c_str(), fit->slope);
    else
      std::printf("slope[%s] = unfit\n", std::string(to_string(s)).c_str());
  }
  return 0;
}

int cmd_decay(const CommonArgs& args, int threads, const CLI::Option* st_opt, const std::string& st_text,
              const CLI::Option* ip_opt, const std::string& ip_text, const CLI::Option* h_opt,
              const std::string& h_text) {
  const Resolved r = resolve(args, "decay");
  DecayConfig dc;
  dc.base = r.cfg;
  dc.n_states = parse_positive_int(pick(st_opt, st_text, r.run, "states", "100"), "states");
  dc.n_paths = parse_positive_int(pick(ip_opt, ip_text, r.run, "inner_paths", "2000"), "inner_paths");
  dc.horizon_steps = parse_positive_int(pick(h_opt, h_text, r.run, "steps", "60"), "steps");

  Output out(args.out, "decay", r.cfg);
  out.param("states", std::to_string(dc.n_states));
  out.param("inner_paths", std::to_string(dc.n_paths));
  out.param("steps", std::to_string(dc.horizon_steps));
  const DecayCurve curve = decay_diagnostic(dc, threads);
  out.write("decay.csv", decay_csv(curve));
  out.finish();

  if (curve.variance_rate)
    std::printf("variance rate = %.4g  amplitude rate = %.4g  (fit over n = 1..%lld)\n", *curve.variance_rate,
                *curve.amplitude_rate, static_cast<long long>(curve.fit_end - 1));
  else
    std::printf("rate unfit: variance never exceeds 10x the floor %g past n = 0\n", curve.floor);
  return 0;
}

int cmd_residual(const CommonArgs& args, int threads, const CLI::Option* s_opt, const std::string& s_text) {
  const Resolved r = resolve(args, "residual");
  const std::vector<double> sigmas =
      parse_double_list(pick(s_opt, s_text, r.run, "sigma_list", "0.3,0.1,0.03,0.01"), "sigma_list");
  Output out(args.out, "residual", r.cfg);
  out.param("sigma_list", format_double_list(sigmas));
  const ResidualResult res = residual_sweep(r.cfg, sigmas, threads);
  out.write("residual.csv", residual_csv(res));
  std::int64_t failed = 0;
  for (const auto& row : res.rows) failed += row.failed;
  out.failed(failed);
  out.finish();

  for (const auto& row : res.rows)
    std::printf("sigma = %-6g kappa = %-10g D11 = %.6g +- %.2g\n", row.sigma, row.kappa, row.d11, row.se);
  std::printf("plateau = %.6g  gap = %.3g\n", res.plateau, res.plateau_gap);
  return 0;
}

int cmd_fieldcheck(const CommonArgs& args, const std::string& dump, const std::string& inject, std::size_t samples,
                   std::size_t chains) {
  const Resolved r = resolve(args, "fieldcheck");
  FieldCheckOptions opt;
  if (!inject.empty()) {
    if (inject != "nontransverse") throw ConfigError("inject: expected 'nontransverse', got '" + inject + "'");
    opt.inject_nontransverse = true;
  }
  opt.spectrum_samples = samples;
  opt.ou_chains = chains;
  Output out(args.out, "fieldcheck", r.cfg);
  if (!inject.empty()) out.param("inject", inject);
  out.param("samples", std::to_string(samples));
  out.param("chains", std::to_string(chains));
  const auto checks = field_check(r.cfg, opt);

  std::string csv = "check,value,threshold,pass\n";
  bool all = true;
  for (const auto& c : checks) {
    csv += c.name + "," + format_double(c.value) + "," + format_double(c.threshold) + "," + (c.pass ? "1" : "0") + "\n";
    std::printf("%s %-15s %.4g (limit %.4g)  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold,
                c.detail.c_str());
    all = all && c.pass;
  }
  out.write("fieldcheck.csv", csv);
  if (!dump.empty()) {
    const auto& kern = simd::kernels(r.cfg.kernel);
    PathStreams streams(r.cfg.seed, 0, kern);
    const double ou_dt = r.cfg.dt / r.cfg.noise_substeps;
    const std::string text =
        r.cfg.dim == 2
            ? modes_csv(sample_field<2>(r.cfg.spectral(), r.cfg.theta, ou_dt, streams.modes, streams.ou_init, kern))
            : modes_csv(sample_field<3>(r.cfg.spectral(), r.cfg.theta, ou_dt, streams.modes, streams.ou_init, kern));
    write_text_file(dump, text);
    std::printf("modes of path 0 written to %s\n", dump.c_str());
  }
  out.finish();
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective diffusivity of passive tracers in random divergence-free flows"};
  app.set_version_flag("--version", std::string(DRIFTDIFFUSE_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: DRIFTDIFFUSE_THREADS, else all cores)")
      ->check(CLI::NonNegativeNumber);

  CommonArgs sim_args, conv_args, decay_args, res_args, fc_args;
  auto* sim = app.add_subcommand("simulate", "ensemble run: D^E curve and raw moments");
  add_common(sim, sim_args);

  auto* conv = app.add_subcommand("convergence", "paired error-vs-dt study against a fine reference");
  add_common(conv, conv_args);
  std::string dt_list, compare, dt_ref;
  auto* dt_opt = conv->add_option("--dt-list", dt_list, "comma-separated step sizes (default 0.0125,0.025,0.05,0.1)");
  auto* cmp_opt = conv->add_option("--compare", compare, "comma-separated schemes (default: the configured scheme)");
  auto* ref_opt = conv->add_option("--dt-ref", dt_ref, "reference step (default min(dt-list)/4)");

  auto* decay = app.add_subcommand("decay", "mixing diagnostic: variance of inner-mean velocity vs time");
  add_common(decay, decay_args);
  std::string states, inner, steps;
  auto* st_opt = decay->add_option("--states", states, "outer initial states (default 100)");
  auto* ip_opt = decay->add_option("--inner-paths", inner, "inner paths per state (default 2000)");
  auto* h_opt = decay->add_option("--steps", steps, "horizon in steps (default 60)");

  auto* res = app.add_subcommand("residual", "sweep of molecular diffusivity");
  add_common(res, res_args);
  std::string sigma_list;
  auto* s_opt = res->add_option("--sigma-list", sigma_list, "descending sigmas (default 0.3,0.1,0.03,0.01)");

  auto* fc = app.add_subcommand("fieldcheck", "divergence, spectrum, isotropy and OU checks");
  add_common(fc, fc_args);
  std::string dump, inject;
  std::size_t samples = 100000, chains = 100000;
  fc->add_option("--dump-modes", dump, "write the path-0 mode set as CSV");
  fc->add_option("--inject", inject, "negative control: 'nontransverse'");
  fc->add_option("--samples", samples, "wavevectors drawn for the spectrum and isotropy checks")->capture_default_str();
  fc->add_option("--chains", chains, "OU chains for the covariance check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(sim_args, threads);
    if (*conv) return cmd_convergence(conv_args, threads, dt_opt, dt_list, cmp_opt, compare, ref_opt, dt_ref);
    if (*decay) return cmd_decay(decay_args, threads, st_opt, states, ip_opt, inner, h_opt, steps);
    if (*res) return cmd_residual(res_args, threads, s_opt, sigma_list);
    if (*fc) return cmd_fieldcheck(fc_args, dump, inject, samples, chains);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
