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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nfsec {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;

/// Thrown for invalid scenario or experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

// ------------------------------------------------------------------------
// Array geometry
// ------------------------------------------------------------------------

/// Uniform planar array in the x-z plane with an odd element count per axis
/// and half-wavelength spacing. Element index n along an axis corresponds to
/// the signed offset nbar = n - nbar_max, nbar in [-nbar_max, nbar_max].
class ArrayGeometry {
 public:
  ArrayGeometry(int n_x, int n_z, double wavelength)
      : n_x_(n_x), n_z_(n_z), wavelength_(wavelength) {
    if (n_x < 1 || n_z < 1 || n_x % 2 == 0 || n_z % 2 == 0)
      throw std::invalid_argument("UPA dimensions must be odd positive integers, got " +
                                  std::to_string(n_x) + "x" + std::to_string(n_z));
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
      throw std::invalid_argument("wavelength must be positive");
  }

  static ArrayGeometry from_carrier(int n_x, int n_z, double carrier_hz) {
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
    return ArrayGeometry(n_x, n_z, kSpeedOfLight / carrier_hz);
  }

  int n_x() const { return n_x_; }
  int n_z() const { return n_z_; }
  int nbar_x() const { return (n_x_ - 1) / 2; }
  int nbar_z() const { return (n_z_ - 1) / 2; }
  int n_b() const { return n_x_ * n_z_; }
  double wavelength() const { return wavelength_; }
  double spacing() const { return wavelength_ / 2.0; }

 private:
  int n_x_;
  int n_z_;
  double wavelength_;
};

// ------------------------------------------------------------------------
// Array response
// ------------------------------------------------------------------------

inline void require_positive_distance(double d) {
  if (!(d > 0.0)) throw std::domain_error("distance must be positive, got " + std::to_string(d));
}

/// Per-element phase along x. With `near_field == false` the quadratic
/// (distance-dependent) term is dropped, giving the planar-wave response.
inline cd steering_phase_x(double theta, double phi, double d, int nbar, double wavelength,
                           bool near_field = true) {
  require_positive_distance(d);
  const double k0 = 2.0 * kPi / wavelength;
  const double ux = std::cos(theta) * std::sin(phi);
  const double n = nbar;
  double path = n * (wavelength / 2.0) * ux;
  if (near_field) path += (n * n / (2.0 * d)) * (wavelength * wavelength / 4.0) * (1.0 - ux * ux);
  return std::polar(1.0, -k0 * path);
}

inline cd steering_phase_z(double phi, double d, int nbar, double wavelength, bool near_field = true) {
  require_positive_distance(d);
  const double k0 = 2.0 * kPi / wavelength;
  const double n = nbar;
  const double s = std::sin(phi);
  double path = n * (wavelength / 2.0) * std::cos(phi);
  if (near_field) path += (n * n / (2.0 * d)) * (wavelength * wavelength / 4.0) * s * s;
  return std::polar(1.0, -k0 * path);
}

/// a = a_x (x) a_z, so the flat index is (nbar_x + Nx) * n_z + (nbar_z + Nz).
inline CVec array_response(const ArrayGeometry& geom, double theta, double phi, double d,
                           bool near_field = true) {
  require_positive_distance(d);
  CVec ax(geom.n_x());
  CVec az(geom.n_z());
  for (int i = 0; i < geom.n_x(); ++i)
    ax(i) = steering_phase_x(theta, phi, d, i - geom.nbar_x(), geom.wavelength(), near_field);
  for (int i = 0; i < geom.n_z(); ++i)
    az(i) = steering_phase_z(phi, d, i - geom.nbar_z(), geom.wavelength(), near_field);
  CVec a(geom.n_b());
  for (int i = 0; i < geom.n_x(); ++i) a.segment(i * geom.n_z(), geom.n_z()) = ax(i) * az;
  return a;
}

/// Urban-microcell large-scale fading at 2 GHz, in dB.
inline double path_loss_db(double d) {
  require_positive_distance(d);
  return -33.05 - 36.7 * std::log10(d);
}

inline double path_loss_linear(double d) { return std::pow(10.0, path_loss_db(d) / 10.0); }

/// Boundary of the radiative near field, 2 D^2 / lambda with D the array diagonal.
inline double rayleigh_distance(const ArrayGeometry& geom) {
  const double nx = geom.n_x() - 1;
  const double nz = geom.n_z() - 1;
  const double aperture = std::sqrt(nx * nx + nz * nz) * geom.spacing();
  return 2.0 * aperture * aperture / geom.wavelength();
}

// Channels are stored as column vectors h, so that the received sample for a
// precoder column w is h^H w. The row form h^H is sqrt(beta) e^{-j 2 pi d / lambda} a^T.

/// LoS channel column. Its row form carries the array response unconjugated.
inline CVec los_channel(const ArrayGeometry& geom, double beta, double theta, double phi, double d,
                        bool near_field = true) {
  if (!(beta > 0.0)) throw std::domain_error("large-scale fading coefficient must be positive");
  const cd carrier = std::polar(std::sqrt(beta), -2.0 * kPi * d / geom.wavelength());
  return (carrier * array_response(geom, theta, phi, d, near_field)).conjugate();
}

// ------------------------------------------------------------------------
// Placements and cell geometry
// ------------------------------------------------------------------------

enum class UeRole { lue, eue };

struct UePlacement {
  double theta = 0.0;      // azimuth [rad], [0, 2 pi)
  double phi = kPi / 2.0;  // elevation [rad], (0, pi)
  double d = 1.0;          // distance [m]
  UeRole role = UeRole::lue;
  int index = 0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct CellRect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 100.0;
  double y_max = 100.0;

  bool contains(Point2 p, double slack = 1e-9) const {
    return p.x >= x_min - slack && p.x <= x_max + slack && p.y >= y_min - slack &&
           p.y <= y_max + slack;
  }
};

/// Plan-view cell coordinates to BS-centric spherical coordinates in the
/// horizontal plane (phi = pi/2). The array x-axis is aligned with the cell x-axis.
inline UePlacement placement_from_cell(Point2 ue, Point2 bs, UeRole role = UeRole::lue, int index = 0) {
  const double dx = ue.x - bs.x;
  const double dy = ue.y - bs.y;
  const double d = std::hypot(dx, dy);
  require_positive_distance(d);
  double theta = std::atan2(dy, dx);
  if (theta < 0.0) theta += 2.0 * kPi;
  return UePlacement{theta, kPi / 2.0, d, role, index};
}

inline Point2 cell_position(const UePlacement& p, Point2 bs) {
  const double r = p.d * std::sin(p.phi);
  return {bs.x + r * std::cos(p.theta), bs.y + r * std::sin(p.theta)};
}

// ------------------------------------------------------------------------
// Scenario and channels
// ------------------------------------------------------------------------

struct Scenario {
  ArrayGeometry geometry{1, 1, 0.15};
  std::vector<UePlacement> lues;
  std::vector<UePlacement> eues;
  double p_b = 1e-3;      // W
  double sigma2 = 0.0;    // W
  CellRect cell;
  Point2 bs{50.0, 100.0};
  int nlos_paths = 0;
  std::uint64_t rng_seed = 0;

  int k_users() const { return static_cast<int>(lues.size()); }
  int e_users() const { return static_cast<int>(eues.size()); }
};

/// Channel columns for every LUE and EUE (N_b x K and N_b x E).
struct ChannelSet {
  CMat lue;
  CMat eue;

  int n_b() const { return static_cast<int>(lue.rows()); }
  int k_users() const { return static_cast<int>(lue.cols()); }
  int e_users() const { return static_cast<int>(eue.cols()); }
  /// Stacked LUE matrix H_b.
  const CMat& h_b() const { return lue; }
};

/// Sum of `scatterers.size()` single-bounce paths; each is a complex Gaussian
/// gain times the array response at the scatterer position (column form).
/// `gains` overrides the random draw when non-empty.
inline CVec nlos_channel(const ArrayGeometry& geom, const std::vector<UePlacement>& scatterers,
                         const std::vector<cd>& gains, std::mt19937_64& rng) {
  if (!gains.empty() && gains.size() != scatterers.size())
    throw std::invalid_argument("nlos_channel: gains and scatterers differ in length");
  CVec row = CVec::Zero(geom.n_b());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < scatterers.size(); ++l) {
    const auto& s = scatterers[l];
    cd g;
    if (!gains.empty()) {
      g = gains[l];
    } else {
      const double sd = std::sqrt(path_loss_linear(s.d) / 2.0);
      const double re = normal(rng);
      const double im = normal(rng);
      g = cd(sd * re, sd * im);
    }
    row += g * array_response(geom, s.theta, s.phi, s.d);
  }
  return row.conjugate();
}

struct ScenarioConfig {
  int n_x = 81;
  int n_z = 1;
  double carrier_hz = 2e9;
  int k_users = 4;
  int e_users = 4;
  double p_b = 1e-3;
  double sigma2 = dbm_to_watts(-96.0);
  CellRect cell;
  Point2 bs{50.0, 100.0};
  double lue_distance_min = 10.0;
  double lue_distance_max = 30.0;
  double azimuth_min = 200.0 * kPi / 180.0;
  double azimuth_max = 340.0 * kPi / 180.0;
  double min_separation = 10.0 * kPi / 180.0;  // between LUE azimuths
  bool collinear_eues = true;
  double eue_distance_ratio = 0.5;
  int nlos_paths = 0;

  void validate() const {
    if (k_users < 1 || e_users < 1) throw ConfigError("K and E must be at least 1");
    if (!(p_b > 0.0)) throw ConfigError("transmit power must be positive");
    if (!(sigma2 > 0.0)) throw ConfigError("noise power must be positive");
    if (!(lue_distance_min > 0.0) || lue_distance_max < lue_distance_min)
      throw ConfigError("LUE distance range must satisfy 0 < min <= max");
    if (azimuth_max < azimuth_min) throw ConfigError("azimuth range is empty");
    if (collinear_eues && !(eue_distance_ratio > 0.0))
      throw ConfigError("collinear EUE distance must be positive (eue_distance_ratio > 0)");
    if (cell.x_max <= cell.x_min || cell.y_max <= cell.y_min) throw ConfigError("cell is degenerate");
    if (nlos_paths < 0) throw ConfigError("nlos_paths must be non-negative");
  }
};

namespace detail {

inline double angular_gap(double a, double b) {
  double g = std::fmod(std::abs(a - b), 2.0 * kPi);
  return std::min(g, 2.0 * kPi - g);
}

inline UePlacement sample_in_cell(const ScenarioConfig& cfg, std::mt19937_64& rng, UeRole role, int index) {
  std::uniform_real_distribution<double> ux(cfg.cell.x_min, cfg.cell.x_max);
  std::uniform_real_distribution<double> uy(cfg.cell.y_min, cfg.cell.y_max);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Point2 p{ux(rng), uy(rng)};
    if (std::hypot(p.x - cfg.bs.x, p.y - cfg.bs.y) < 1.0) continue;
    return placement_from_cell(p, cfg.bs, role, index);
  }
  throw ConfigError("could not place a UE inside the cell");
}

}  // namespace detail

/// Channels for a fixed set of placements. NLoS scatterers are drawn from `rng`.
inline ChannelSet build_channels(const Scenario& sc, std::mt19937_64& rng) {
  const auto& geom = sc.geometry;
  ChannelSet ch;
  ch.lue.resize(geom.n_b(), sc.k_users());
  ch.eue.resize(geom.n_b(), sc.e_users());
  ScenarioConfig cell_cfg;
  cell_cfg.cell = sc.cell;
  cell_cfg.bs = sc.bs;
  auto make = [&](const UePlacement& p) {
    CVec h = los_channel(geom, path_loss_linear(p.d), p.theta, p.phi, p.d);
    if (sc.nlos_paths > 0) {
      std::vector<UePlacement> scatterers;
      for (int l = 0; l < sc.nlos_paths; ++l)
        scatterers.push_back(detail::sample_in_cell(cell_cfg, rng, UeRole::lue, l));
      h += nlos_channel(geom, scatterers, {}, rng);
    }
    return h;
  };
  for (int k = 0; k < sc.k_users(); ++k) ch.lue.col(k) = make(sc.lues[k]);
  for (int e = 0; e < sc.e_users(); ++e) ch.eue.col(e) = make(sc.eues[e]);
  return ch;
}

/// Draws LUE placements in the configured annulus sector, pairs EUEs with LUEs
/// (EUE e shares the direction of LUE e mod K when collinear) and builds the
/// channels. A pure function of (config, seed).
inline std::pair<Scenario, ChannelSet> generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Scenario sc;
  sc.geometry = ArrayGeometry::from_carrier(cfg.n_x, cfg.n_z, cfg.carrier_hz);
  sc.p_b = cfg.p_b;
  sc.sigma2 = cfg.sigma2;
  sc.cell = cfg.cell;
  sc.bs = cfg.bs;
  sc.nlos_paths = cfg.nlos_paths;
  sc.rng_seed = seed;

  std::uniform_real_distribution<double> u_dist(cfg.lue_distance_min, cfg.lue_distance_max);
  std::uniform_real_distribution<double> u_az(cfg.azimuth_min, cfg.azimuth_max);
  for (int k = 0; k < cfg.k_users; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const double theta = u_az(rng);
      const double d = u_dist(rng);
      UePlacement p{std::fmod(theta + 2.0 * kPi, 2.0 * kPi), kPi / 2.0, d, UeRole::lue, k};
      if (!cfg.cell.contains(cell_position(p, cfg.bs))) continue;
      bool separated = true;
      for (const auto& q : sc.lues)
        if (detail::angular_gap(q.theta, p.theta) < cfg.min_separation) separated = false;
      if (!separated) continue;
      sc.lues.push_back(p);
      placed = true;
    }
    if (!placed) throw ConfigError("could not place LUE " + std::to_string(k) + " with the requested separation");
  }

  for (int e = 0; e < cfg.e_users; ++e) {
    if (cfg.collinear_eues) {
      const auto& partner = sc.lues[e % cfg.k_users];
      UePlacement p = partner;
      p.d = cfg.eue_distance_ratio * partner.d;
      p.role = UeRole::eue;
      p.index = e;
      if (!(p.d > 0.0)) throw ConfigError("EUE distance must be positive");
      sc.eues.push_back(p);
    } else {
      sc.eues.push_back(detail::sample_in_cell(cfg, rng, UeRole::eue, e));
    }
  }

  ChannelSet ch = build_channels(sc, rng);
  return {std::move(sc), std::move(ch)};
}

}  // namespace nfsec
