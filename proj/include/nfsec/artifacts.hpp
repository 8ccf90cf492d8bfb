// SPDX-License-Identifier: Apache-2.0
//
// nfsec: secure near-field XL-MIMO downlink simulation
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "nfsec/experiment.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfsec {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCsvHeader =
    "trial,scheme,mode,sweep_var,sweep_value,min_sr_nats,min_sr_bits,epsilon,iterations,converged,wall_ms";

/// %.9g, the precision used for every float in the CSV outputs.
inline std::string fmt9(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot write '" + path + "'");
  return out;
}

inline void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw OutputError("I/O error while writing '" + path + "'");
}

}  // namespace detail

inline std::string format_csv(std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), row_less);
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.trial << ',' << to_string(r.scheme) << ',' << to_string(r.mode) << ',' << to_string(r.sweep_var) << ','
       << fmt9(r.sweep_value) << ',' << fmt9(r.min_sr_nats) << ',' << fmt9(r.min_sr_bits) << ',' << fmt9(r.epsilon)
       << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << fmt9(r.wall_ms) << '\n';
  }
  return os.str();
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw OutputError("no results to write to '" + path + "'");
  const std::string text = format_csv(rows);
  auto out = detail::open_output(path);
  out << text;
  detail::close_output(out, path);
}

/// Inverse of emit_csv; used to check round trips.
inline std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw std::runtime_error("malformed CSV row: " + line);
    ResultRow r;
    r.trial = std::stoi(f[0]);
    r.scheme = parse_scheme(f[1]).value();
    r.mode = parse_mode(f[2]).value();
    r.sweep_var = f[3] == "epsilon" ? SweepVar::epsilon : f[3] == "power_dbm" ? SweepVar::power_dbm : SweepVar::none;
    r.sweep_value = std::stod(f[4]);
    r.min_sr_nats = std::stod(f[5]);
    r.min_sr_bits = std::stod(f[6]);
    r.epsilon = std::stod(f[7]);
    r.iterations = std::stoi(f[8]);
    r.converged = f[9] == "1";
    r.wall_ms = std::stod(f[10]);
    rows.push_back(r);
  }
  return rows;
}

inline void emit_summary_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw OutputError("no results to write to '" + path + "'");
  std::ostringstream os;
  os << "scheme,mode,sweep_var,sweep_value,mean_min_sr_nats,mean_min_sr_bits,runs,failures\n";
  for (const auto& [key, pts] : aggregate(rows))
    for (const auto& p : pts)
      os << to_string(key.scheme) << ',' << to_string(key.mode) << ',' << to_string(rows.front().sweep_var) << ','
         << fmt9(p.sweep_value) << ',' << fmt9(p.mean_nats) << ',' << fmt9(p.mean_bits) << ',' << p.runs << ','
         << p.failures << '\n';
  auto out = detail::open_output(path);
  out << os.str();
  detail::close_output(out, path);
}

// ------------------------------------------------------------------------
// SVG line plot
// ------------------------------------------------------------------------

namespace detail {

inline const std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string axis_label(SweepVar v) {
  switch (v) {
    case SweepVar::epsilon: return "power allocation factor epsilon";
    case SweepVar::power_dbm: return "transmit power P_b [dBm]";
    case SweepVar::none: return "run";
  }
  return "";
}

}  // namespace detail

/// One polyline per (scheme, mode): x = sweep value, y = mean minimum SR in
/// bits/s/Hz. `only` restricts the series; asking for one that is absent is an
/// error naming the ones available.
inline std::string format_plot(const std::vector<ResultRow>& rows, const std::vector<SeriesKey>& only = {}) {
  if (rows.empty()) throw OutputError("no results to plot");
  const SweepVar var = rows.front().sweep_var;
  auto series = aggregate(rows);
  if (!only.empty()) {
    std::map<SeriesKey, std::vector<SeriesPoint>> picked;
    for (const auto& k : only) {
      auto it = series.find(k);
      if (it == series.end()) {
        std::string avail;
        for (const auto& [key, _] : series) avail += (avail.empty() ? "" : ", ") + key.label();
        throw OutputError("series '" + k.label() + "' not in results; available: " + avail);
      }
      picked.insert(*it);
    }
    series = std::move(picked);
  }

  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_hi = 0.0;
  for (const auto& [_, pts] : series)
    for (const auto& p : pts) {
      x_lo = std::min(x_lo, p.sweep_value);
      x_hi = std::max(x_hi, p.sweep_value);
      if (std::isfinite(p.mean_bits)) y_hi = std::max(y_hi, p.mean_bits);
    }
  if (!(x_hi > x_lo)) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (!(y_hi > 0.0)) y_hi = 1.0;
  y_hi *= 1.05;

  const double w = 720, h = 460, ml = 70, mr = 190, mt = 20, mb = 60;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return mt + ph - y / y_hi * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 5.0;
    const double yv = y_hi * i / 5.0;
    os << "<line x1=\"" << fmt9(px(xv)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt9(px(xv)) << "\" y2=\""
       << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt9(px(xv)) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">" << fmt9(std::round(xv * 1000) / 1000)
       << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt9(py(yv)) << "\" x2=\"" << ml << "\" y2=\"" << fmt9(py(yv))
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << fmt9(py(yv) + 4) << "\" text-anchor=\"end\">"
       << fmt9(std::round(yv * 100) / 100) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
     << detail::axis_label(var) << "</text>\n";
  os << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
     << ")\">minimum secrecy rate [bits/s/Hz]</text>\n";

  int idx = 0;
  for (const auto& [key, pts] : series) {
    const char* color = detail::kPalette[idx % detail::kPalette.size()];
    os << "<polyline class=\"series\" data-series=\"" << key.label() << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& p : pts) {
      if (!std::isfinite(p.mean_bits)) continue;
      os << (first ? "" : " ") << fmt9(px(p.sweep_value)) << ',' << fmt9(py(p.mean_bits));
      first = false;
    }
    os << "\"/>\n";
    const double ly = mt + 15 + 20 * idx;
    os << "<line x1=\"" << ml + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw + 46 << "\" y=\"" << ly + 4 << "\">" << key.label() << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_plot(const std::vector<ResultRow>& rows, const std::string& path,
                      const std::vector<SeriesKey>& only = {}) {
  const std::string svg = format_plot(rows, only);
  auto out = detail::open_output(path);
  out << svg;
  detail::close_output(out, path);
}

// ------------------------------------------------------------------------
// Beam pattern
// ------------------------------------------------------------------------

struct BeamGrid {
  int nx = 101;
  int ny = 101;
  CellRect area;

  void validate() const {
    if (nx < 2 || ny < 2) throw ConfigError("beam pattern grid needs at least 2 x 2 points");
    if (!(area.x_max > area.x_min) || !(area.y_max > area.y_min)) throw ConfigError("beam pattern area is degenerate");
  }
  /// Cell centres, so no sample sits on the array itself.
  double x(int i) const { return area.x_min + (i + 0.5) * (area.x_max - area.x_min) / nx; }
  double y(int j) const { return area.y_min + (j + 0.5) * (area.y_max - area.y_min) / ny; }
};

struct BeamSample {
  double signal = 0.0;  // eps_s ||h_p^H W||^2 [W]
  double an = 0.0;      // eps_a ||h_p^H V||^2 [W]
};

/// Received signal and AN power at a point of the cell (LoS virtual channel).
inline BeamSample beam_power_at(const Scenario& sc, const PrecodingState& st, Point2 p) {
  const auto u = placement_from_cell(p, sc.bs);
  const CVec h = los_channel(sc.geometry, path_loss_linear(u.d), u.theta, u.phi, u.d);
  const auto split = power_split(st.epsilon, sc.p_b, static_cast<int>(st.w.cols()), static_cast<int>(st.w.rows()));
  return {split.eps_s * (h.adjoint() * st.w).squaredNorm(), split.eps_a * (h.adjoint() * st.v).squaredNorm()};
}

struct BeamPattern {
  BeamGrid grid;
  Eigen::MatrixXd signal;  // ny x nx, row j is y(j)
  Eigen::MatrixXd an;
};

inline BeamPattern beam_pattern(const Scenario& sc, const PrecodingState& st, const BeamGrid& grid) {
  grid.validate();
  BeamPattern bp{grid, Eigen::MatrixXd(grid.ny, grid.nx), Eigen::MatrixXd(grid.ny, grid.nx)};
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const auto s = beam_power_at(sc, st, {grid.x(i), grid.y(j)});
      bp.signal(j, i) = s.signal;
      bp.an(j, i) = s.an;
    }
  return bp;
}

namespace detail {

/// Perceptually ordered dark-blue to yellow ramp.
inline std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static const std::array<std::array<double, 3>, 5> stops{
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  const double s = t * 4.0;
  const int i = std::min(3, static_cast<int>(s));
  const double f = s - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

inline void heatmap_panel(std::ostringstream& os, const Eigen::MatrixXd& m, double x0, double y0, double size,
                          const std::string& title, double dynamic_db) {
  const double peak = m.maxCoeff();
  const double cw = size / m.cols();
  const double chh = size / m.rows();
  os << "<text x=\"" << x0 + size / 2 << "\" y=\"" << y0 - 8 << "\" text-anchor=\"middle\">" << title << "</text>\n";
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      const double db = peak > 0.0 && m(j, i) > 0.0 ? 10.0 * std::log10(m(j, i) / peak) : -dynamic_db;
      // Larger y is closer to the BS edge; draw it at the top.
      const double yy = y0 + (m.rows() - 1 - j) * chh;
      os << "<rect x=\"" << fmt9(x0 + i * cw) << "\" y=\"" << fmt9(yy) << "\" width=\"" << fmt9(cw + 0.05)
         << "\" height=\"" << fmt9(chh + 0.05) << "\" fill=\"" << heat_color(1.0 + db / dynamic_db) << "\"/>\n";
    }
  os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << size << "\" height=\"" << size
     << "\" fill=\"none\" stroke=\"black\"/>\n";
}

}  // namespace detail

inline std::string format_beam_svg(const BeamPattern& bp, const Scenario& sc, double dynamic_db = 40.0) {
  const double size = 360, pad = 50;
  const double w = 2 * size + 3 * pad, h = size + 2 * pad;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  detail::heatmap_panel(os, bp.signal, pad, pad, size, "signal power [dB rel. peak]", dynamic_db);
  detail::heatmap_panel(os, bp.an, 2 * pad + size, pad, size, "AN power [dB rel. peak]", dynamic_db);
  const auto& a = bp.grid.area;
  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = pad + panel * (size + pad);
    auto mark = [&](const UePlacement& u, const char* color) {
      const auto p = cell_position(u, sc.bs);
      const double sx = x0 + (p.x - a.x_min) / (a.x_max - a.x_min) * size;
      const double sy = pad + (a.y_max - p.y) / (a.y_max - a.y_min) * size;
      os << "<circle cx=\"" << fmt9(sx) << "\" cy=\"" << fmt9(sy) << "\" r=\"4\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"2\"/>\n";
    };
    for (const auto& u : sc.lues) mark(u, "white");
    for (const auto& u : sc.eues) mark(u, "red");
  }
  os << "<text x=\"" << pad << "\" y=\"" << h - 15 << "\">white: LUE, red: EUE, range " << dynamic_db
     << " dB</text>\n";
  os << "</svg>\n";
  return os.str();
}

inline std::string format_beam_csv(const BeamPattern& bp) {
  std::ostringstream os;
  os << "x_m,y_m,signal_w,an_w\n";
  for (int j = 0; j < bp.grid.ny; ++j)
    for (int i = 0; i < bp.grid.nx; ++i)
      os << fmt9(bp.grid.x(i)) << ',' << fmt9(bp.grid.y(j)) << ',' << fmt9(bp.signal(j, i)) << ','
         << fmt9(bp.an(j, i)) << '\n';
  return os.str();
}

/// Writes `<prefix>.csv` and/or `<prefix>.svg`.
inline BeamPattern emit_beam_pattern(const Scenario& sc, const PrecodingState& st, const BeamGrid& grid,
                                     const std::string& prefix, OutputFormat format = OutputFormat::both) {
  BeamPattern bp = beam_pattern(sc, st, grid);
  if (format != OutputFormat::svg) {
    auto out = detail::open_output(prefix + ".csv");
    out << format_beam_csv(bp);
    detail::close_output(out, prefix + ".csv");
  }
  if (format != OutputFormat::csv) {
    auto out = detail::open_output(prefix + ".svg");
    out << format_beam_svg(bp, sc);
    detail::close_output(out, prefix + ".svg");
  }
  return bp;
}

}  // namespace nfsec
