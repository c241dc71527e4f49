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

#include "driftdiffuse/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace driftdiffuse {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void type_error(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) type_error(key, value, expected);
  return out;
}

int parse_int(const std::string& key, const std::string& value) { return parse_number<int>(key, value, "an integer"); }

double parse_real(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value, "a number");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  type_error(key, value, "true|false");
}

// Returns false for keys this function does not know.
bool apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value, bool& scheme_set) {
  if (key == "dim") cfg.dim = parse_int(key, value);
  else if (key == "modes") cfg.modes = parse_int(key, value);
  else if (key == "cutoff_k") cfg.cutoff_k = parse_real(key, value);
  else if (key == "alpha") cfg.alpha = parse_real(key, value);
  else if (key == "theta") cfg.theta = parse_real(key, value);
  else if (key == "sigma") cfg.sigma = parse_real(key, value);
  else if (key == "dt") cfg.dt = parse_real(key, value);
  else if (key == "horizon") cfg.horizon = parse_real(key, value);
  else if (key == "paths") cfg.paths = parse_number<std::int64_t>(key, value, "an integer");
  else if (key == "scheme") {
    cfg.scheme.kind = parse_scheme_kind(value);
    scheme_set = true;
  } else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value, "an unsigned 64-bit integer");
  else if (key == "stride") cfg.stride = parse_int(key, value);
  else if (key == "drift_correct") cfg.drift_correct = parse_bool(key, value);
  else if (key == "field") cfg.field = parse_field_kind(value);
  else if (key == "kernel") cfg.kernel = simd::parse_kernel_kind(value);
  else if (key == "noise_substeps") cfg.noise_substeps = parse_int(key, value);
  else if (key == "solver") cfg.scheme.solver = parse_solver_kind(value);
  else if (key == "tol") cfg.scheme.tol = parse_real(key, value);
  else if (key == "max_iter") cfg.scheme.max_iterations = parse_int(key, value);
  else if (key == "fd_step") cfg.scheme.fd_step = parse_real(key, value);
  else return false;
  return true;
}

}  // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
    KeyValue kv{trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError(where + ": missing key");
    if (kv.value.empty()) throw ConfigError(where + ": " + kv.key + ": missing value");
    for (const auto& prev : out)
      if (prev.key == kv.key)
        throw ConfigError(where + ": " + kv.key + ": duplicate key (first set on line " +
                          std::to_string(prev.line) + ")");
    out.push_back(std::move(kv));
  }
  return out;
}

ParsedConfig parse_config_text(const std::string& text, const std::vector<KeyValue>& overrides,
                               const std::string& source) {
  ParsedConfig out;
  bool scheme_set = false;
  auto apply = [&](const KeyValue& kv) {
    if (kv.key.rfind("run.", 0) == 0) {
      out.run[kv.key.substr(4)] = kv.value;
      return;
    }
    if (!apply_key(out.experiment, kv.key, kv.value, scheme_set)) throw ConfigError(kv.key + ": unknown key");
  };
  for (const auto& kv : parse_key_values(text, source)) apply(kv);
  for (const auto& kv : overrides) apply(kv);
  if (!scheme_set && out.experiment.dim == 3) out.experiment.scheme.kind = SchemeKind::modesplit;
  out.experiment.validate();
  return out;
}

ParsedConfig parse_config_file(const std::filesystem::path& path, const std::vector<KeyValue>& overrides) {
  if (path.empty()) return parse_config_text("", overrides, "<defaults>");
  return parse_config_text(read_text_file(path), overrides, path.string());
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) throw ConfigError(key + ": empty list entry in '" + text + "'");
    out.push_back(parse_real(key, t));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string format_double_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "dim = " << cfg.dim << "\n"
    << "modes = " << cfg.modes << "\n"
    << "cutoff_k = " << format_double(cfg.cutoff_k) << "\n"
    << "alpha = " << format_double(cfg.alpha) << "\n"
    << "theta = " << format_double(cfg.theta) << "\n"
    << "sigma = " << format_double(cfg.sigma) << "\n"
    << "dt = " << format_double(cfg.dt) << "\n"
    << "horizon = " << format_double(cfg.horizon) << "\n"
    << "paths = " << cfg.paths << "\n"
    << "scheme = " << to_string(cfg.scheme.kind) << "\n"
    << "seed = " << cfg.seed << "\n"
    << "stride = " << cfg.stride << "\n"
    << "drift_correct = " << (cfg.drift_correct ? "true" : "false") << "\n"
    << "field = " << to_string(cfg.field) << "\n"
    << "kernel = " << simd::to_string(simd::resolve(cfg.kernel)) << "\n"
    << "noise_substeps = " << cfg.noise_substeps << "\n"
    << "solver = " << to_string(cfg.scheme.solver) << "\n"
    << "tol = " << format_double(cfg.scheme.tol) << "\n"
    << "max_iter = " << cfg.scheme.max_iterations << "\n"
    << "fd_step = " << format_double(cfg.scheme.fd_step) << "\n";
  return o.str();
}

std::string serialize_manifest(const RunManifest& m) {
  std::ostringstream o;
  o << "# driftdiffuse run manifest; pass back with --config to repeat the run\n";
  o << serialize_config(m.config);
  o << "run.command = " << m.command << "\n";
  o << "run.version = " << m.version << "\n";
  for (const auto& [k, v] : m.parameters) o << "run." << k << " = " << v << "\n";
  o << "run.wall_seconds = " << format_double(m.wall_seconds) << "\n";
  o << "run.failed_paths = " << m.failed_paths << "\n";
  std::string outputs;
  for (std::size_t i = 0; i < m.outputs.size(); ++i) outputs += (i ? "," : "") + m.outputs[i];
  if (!outputs.empty()) o << "run.outputs = " << outputs << "\n";
  return o.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
  return ss.str();
}

}  // namespace driftdiffuse
