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

// Plain-text `key = value` configuration and run manifests.
//
// One assignment per line; `#` starts a comment; blank lines are ignored.
// Keys and defaults (the 2D reference roster):
//
//   dim = 2              modes = 1000        cutoff_k = 10      alpha = 0.75
//   theta = 10           sigma = 0.1         dt = 0.01          horizon = 22
//   paths = 1000         scheme = midpoint2d (modesplit when dim = 3)
//   seed = 1             stride = 20         drift_correct = false
//
// Extension keys: field = spectral|zero, kernel = auto|scalar|avx2,
// noise_substeps = 1, solver = newton|fixed_point, tol = 1e-12,
// max_iter = 50, fd_step = 1e-5.
//
// A manifest is a config file with every key resolved plus `run.*` keys
// describing the run. Feeding it back through parse_config restores the
// experiment; the `run.*` keys are returned separately.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "driftdiffuse/ensemble.hpp"

namespace driftdiffuse {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits text into assignments. Throws ConfigError on malformed lines and
/// duplicate keys.
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source = "<config>");

struct ParsedConfig {
  ExperimentConfig experiment;
  /// `run.*` entries, key without the prefix.
  std::map<std::string, std::string> run;
};

/// Applies file entries, then `overrides` (later wins), validates, and fills
/// scheme-by-dimension defaults. Errors name the offending key.
ParsedConfig parse_config_text(const std::string& text, const std::vector<KeyValue>& overrides = {},
                               const std::string& source = "<config>");

/// As above, reading `path`; an empty path means defaults plus overrides.
/// Throws IoError when the file cannot be read.
ParsedConfig parse_config_file(const std::filesystem::path& path, const std::vector<KeyValue>& overrides = {});

/// Every experiment key, one per line, doubles at 17 significant digits.
/// `automatic` kernels are written as the kernel actually selected.
std::string serialize_config(const ExperimentConfig& cfg);

struct RunManifest {
  ExperimentConfig config;
  std::string command;
  std::string version;
  double wall_seconds = 0.0;
  std::int64_t failed_paths = 0;
  std::vector<std::string> outputs;
  /// Command-specific parameters (dt_list, sigma_list, ...), already formatted.
  std::vector<std::pair<std::string, std::string>> parameters;
};

std::string serialize_manifest(const RunManifest& m);

/// 17 significant digits (%.17g): reads back to the same double.
std::string format_double(double x);

/// Comma-separated doubles, e.g. "0.1,0.05".
std::vector<double> parse_double_list(const std::string& text, const std::string& key);
std::string format_double_list(const std::vector<double>& xs);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace driftdiffuse
