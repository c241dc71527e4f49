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

#include "driftdiffuse/csv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "driftdiffuse/config.hpp"

namespace driftdiffuse {

std::string diffusivity_csv(const DiffusivityCurve& curve) {
  std::ostringstream o;
  o << "# estimator = " << to_string(curve.variant) << "\n";
  o << "t";
  for (int i = 1; i <= curve.dim; ++i) o << ",D" << i << i << ",D" << i << i << "_se";
  o << ",D12,count\n";
  for (std::size_t k = 0; k < curve.records(); ++k) {
    o << format_double(curve.times[k]);
    for (int i = 0; i < curve.dim; ++i)
      o << "," << format_double(curve.entry(k, i, i)) << "," << format_double(curve.stderr_of(k, i));
    o << "," << format_double(curve.entry(k, 0, 1)) << "," << curve.counts[k] << "\n";
  }
  return o.str();
}

std::string moments_csv(const MomentAccumulator& acc) {
  const int d = acc.dim();
  std::ostringstream o;
  o << "t,count";
  for (int i = 1; i <= d; ++i) o << ",sumX_" << i;
  for (int i = 1; i <= d; ++i)
    for (int j = i; j <= d; ++j) o << ",sumXX_" << i << j;
  for (int i = 1; i <= d; ++i) o << ",sumB_" << i;
  o << ",failed\n";
  for (std::size_t k = 0; k < acc.records(); ++k) {
    o << format_double(acc.time(k)) << "," << acc.count(k);
    for (int i = 0; i < d; ++i) o << "," << format_double(acc.sum_x(k, i));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) o << "," << format_double(acc.sum_xx(k, i, j));
    for (int i = 0; i < d; ++i) o << "," << format_double(acc.sum_b(k, i));
    o << "," << acc.failed() << "\n";
  }
  return o.str();
}

std::string convergence_csv(const ConvergenceResult& r) {
  std::ostringstream o;
  o << "# dt_ref = " << format_double(r.dt_ref) << "\n";
  o << "# D11_ref = " << format_double(r.d11_ref) << " +- " << format_double(r.d11_ref_se) << "\n";
  o << "# paths = " << r.count << ", failed = " << r.failed << "\n";
  std::vector<SchemeKind> order;
  for (const auto& p : r.points)
    if (std::find(order.begin(), order.end(), p.scheme) == order.end()) order.push_back(p.scheme);
  for (std::size_t i = 0; i < order.size() && i < r.fits.size(); ++i) {
    o << "# slope[" << to_string(order[i]) << "] = ";
    if (r.fits[i])
      o << format_double(r.fits[i]->slope);
    else
      o << "unfit";
    o << "\n";
  }
  o << "scheme,dt,abs_error,stderr,included_in_fit,D11\n";
  for (const auto& p : r.points)
    o << to_string(p.scheme) << "," << format_double(p.dt) << "," << format_double(p.abs_error) << ","
      << format_double(p.std_err) << "," << (p.included_in_fit ? 1 : 0) << "," << format_double(p.d11) << "\n";
  return o.str();
}

std::string decay_csv(const DecayCurve& c) {
  std::ostringstream o;
  o << "# variance = across-state sample variance of the inner-mean b_1; it tracks the squared norm\n";
  o << "# variance_rate = ";
  o << (c.variance_rate ? format_double(*c.variance_rate) : std::string("unfit")) << "\n";
  o << "# amplitude_rate = " << (c.amplitude_rate ? format_double(*c.amplitude_rate) : std::string("unfit"))
    << " (variance_rate / 2)\n";
  o << "# fit window: n = 1 .. " << c.fit_end - 1 << "\n";
  o << "n,t,variance,floor\n";
  for (std::size_t k = 0; k < c.n.size(); ++k)
    o << c.n[k] << "," << format_double(c.t[k]) << "," << format_double(c.variance[k]) << ","
      << format_double(c.floor) << "\n";
  return o.str();
}

std::string residual_csv(const ResidualResult& r) {
  std::ostringstream o;
  o << "# plateau = " << format_double(r.plateau) << "\n";
  o << "# plateau_gap = " << format_double(r.plateau_gap) << "\n";
  o << "sigma,kappa,D11,D11_se,count\n";
  for (const auto& row : r.rows)
    o << format_double(row.sigma) << "," << format_double(row.kappa) << "," << format_double(row.d11) << ","
      << format_double(row.se) << "," << row.count << "\n";
  return o.str();
}

template <int D>
std::string modes_csv(const SpectralField<D>& field) {
  const auto& modes = field.modes();
  const auto& ou = field.ou();
  const int c = ou.components;
  std::ostringstream o;
  o << "m";
  for (int i = 1; i <= D; ++i) o << ",k_" << i;
  for (int i = 1; i <= c; ++i) o << ",xi_" << i;
  for (int i = 1; i <= c; ++i) o << ",eta_" << i;
  o << "\n";
  for (std::size_t m = 0; m < modes.count; ++m) {
    o << m;
    for (int i = 0; i < D; ++i) o << "," << format_double(modes.wavevectors[m][i]);
    for (int i = 0; i < c; ++i) o << "," << format_double(ou.xi[i * ou.modes + m]);
    for (int i = 0; i < c; ++i) o << "," << format_double(ou.eta[i * ou.modes + m]);
    o << "\n";
  }
  return o.str();
}

template std::string modes_csv<2>(const SpectralField<2>&);
template std::string modes_csv<3>(const SpectralField<3>&);

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("csv: no column '" + name + "'");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const std::string& cell = row[c];
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
      throw IoError("csv: column '" + name + "' holds non-numeric '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(l);
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw IoError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                    std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace driftdiffuse
