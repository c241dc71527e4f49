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

#include "driftdiffuse/integrators.hpp"

namespace driftdiffuse {

SchemeKind parse_scheme_kind(std::string_view text) {
  if (text == "midpoint2d") return SchemeKind::midpoint2d;
  if (text == "modesplit") return SchemeKind::modesplit;
  if (text == "euler") return SchemeKind::euler;
  throw ConfigError("scheme: expected one of midpoint2d|modesplit|euler, got '" + std::string(text) + "'");
}

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::midpoint2d:
      return "midpoint2d";
    case SchemeKind::modesplit:
      return "modesplit";
    default:
      return "euler";
  }
}

SolverKind parse_solver_kind(std::string_view text) {
  if (text == "newton") return SolverKind::newton;
  if (text == "fixed_point") return SolverKind::fixed_point;
  throw ConfigError("solver: expected newton|fixed_point, got '" + std::string(text) + "'");
}

std::string_view to_string(SolverKind kind) { return kind == SolverKind::newton ? "newton" : "fixed_point"; }

void SchemeConfig::validate(int dim) const {
  if (!(tol > 0.0)) throw ConfigError("tol: must be > 0");
  if (max_iterations < 1) throw ConfigError("max_iter: must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step: must be > 0");
  if (kind == SchemeKind::midpoint2d && dim != 2)
    throw ConfigError("scheme: midpoint2d is only valid for dim = 2 (use modesplit or euler)");
}

}  // namespace driftdiffuse
