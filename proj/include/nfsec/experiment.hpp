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

#include "nfsec/algorithm.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace nfsec {

enum class SweepVar { none, epsilon, power_dbm };

inline std::string_view to_string(SweepVar v) {
  switch (v) {
    case SweepVar::none: return "none";
    case SweepVar::epsilon: return "epsilon";
    case SweepVar::power_dbm: return "power_dbm";
  }
  return "?";
}

enum class OutputFormat { csv, svg, both };

inline std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "svg") return OutputFormat::svg;
  if (s == "both") return OutputFormat::both;
  return std::nullopt;
}

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::uint64_t seed = 1;
  int trials = 5;
  SweepVar sweep_var = SweepVar::epsilon;
  std::vector<double> sweep_values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<Scheme> schemes{Scheme::proposed, Scheme::no_an, Scheme::mrt_an, Scheme::ffb};
  std::vector<CsiMode> modes{CsiMode::unknown_eue, CsiMode::perfect_eue};
  // Power split used by S1 runs when epsilon is not swept. Without EUE CSI the
  // objective never rewards AN, so a free search would always return 1.
  std::optional<double> s1_epsilon = 0.5;
  std::optional<double> epsilon;  // override for every run
  RunOptions run;
  int threads = 0;                // 0: hardware concurrency
  bool record_wall_time = false;  // off keeps CSV output byte-reproducible
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::both;
  int grid_nx = 101;
  int grid_ny = 101;
  double beampattern_epsilon = 0.5;

  double sigma2_dbm() const { return watts_to_dbm(scenario.sigma2); }

  void validate() const {
    scenario.validate();
    run.validate();
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (schemes.empty()) throw ConfigError("schemes must not be empty");
    if (modes.empty()) throw ConfigError("modes must not be empty");
    if (sweep_var != SweepVar::none && sweep_values.empty()) throw ConfigError("sweep_values must not be empty");
    for (double v : sweep_values) {
      if (sweep_var == SweepVar::epsilon && !(v > 0.0 && v <= 1.0))
        throw ConfigError("sweep_values: epsilon must lie in (0, 1], got " + std::to_string(v));
      if (sweep_var == SweepVar::power_dbm && !std::isfinite(v))
        throw ConfigError("sweep_values: power must be finite");
    }
    auto check_eps = [](const std::optional<double>& e, const char* key) {
      if (e && !(*e > 0.0 && *e <= 1.0))
        throw ConfigError(std::string(key) + " must lie in (0, 1], got " + std::to_string(*e));
    };
    check_eps(s1_epsilon, "s1_epsilon");
    check_eps(epsilon, "epsilon");
    if (!(beampattern_epsilon > 0.0 && beampattern_epsilon <= 1.0))
      throw ConfigError("beampattern_epsilon must lie in (0, 1]");
    if (grid_nx < 2 || grid_ny < 2) throw ConfigError("beam pattern grid needs at least 2 x 2 points");
    if (threads < 0) throw ConfigError("threads must be non-negative");
  }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("key '" + key + "': " + ex.what());
  }
}

inline double deg(double x) { return x * kPi / 180.0; }

}  // namespace detail

/// Reads the flat JSON object described in the README. Unknown keys and
/// out-of-range values raise ConfigError naming the key.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    cfg.validate();
    return cfg;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  auto& sc = cfg.scenario;
  for (const auto& [key, v] : doc.items()) {
    using detail::json_get;
    if (key == "seed") cfg.seed = json_get<std::uint64_t>(v, key);
    else if (key == "trials") cfg.trials = json_get<int>(v, key);
    else if (key == "n_x") sc.n_x = json_get<int>(v, key);
    else if (key == "n_z") sc.n_z = json_get<int>(v, key);
    else if (key == "carrier_hz") sc.carrier_hz = json_get<double>(v, key);
    else if (key == "k_users") sc.k_users = json_get<int>(v, key);
    else if (key == "e_users") sc.e_users = json_get<int>(v, key);
    else if (key == "p_b_dbm") sc.p_b = dbm_to_watts(json_get<double>(v, key));
    else if (key == "sigma2_dbm") sc.sigma2 = dbm_to_watts(json_get<double>(v, key));
    else if (key == "lue_distance_min") sc.lue_distance_min = json_get<double>(v, key);
    else if (key == "lue_distance_max") sc.lue_distance_max = json_get<double>(v, key);
    else if (key == "azimuth_min_deg") sc.azimuth_min = detail::deg(json_get<double>(v, key));
    else if (key == "azimuth_max_deg") sc.azimuth_max = detail::deg(json_get<double>(v, key));
    else if (key == "min_separation_deg") sc.min_separation = detail::deg(json_get<double>(v, key));
    else if (key == "collinear_eues") sc.collinear_eues = json_get<bool>(v, key);
    else if (key == "eue_distance_ratio") sc.eue_distance_ratio = json_get<double>(v, key);
    else if (key == "nlos_paths") sc.nlos_paths = json_get<int>(v, key);
    else if (key == "cell_x_min") sc.cell.x_min = json_get<double>(v, key);
    else if (key == "cell_x_max") sc.cell.x_max = json_get<double>(v, key);
    else if (key == "cell_y_min") sc.cell.y_min = json_get<double>(v, key);
    else if (key == "cell_y_max") sc.cell.y_max = json_get<double>(v, key);
    else if (key == "bs_x") sc.bs.x = json_get<double>(v, key);
    else if (key == "bs_y") sc.bs.y = json_get<double>(v, key);
    else if (key == "sweep_var") {
      const auto s = json_get<std::string>(v, key);
      if (s == "epsilon") cfg.sweep_var = SweepVar::epsilon;
      else if (s == "power_dbm") cfg.sweep_var = SweepVar::power_dbm;
      else if (s == "none") cfg.sweep_var = SweepVar::none;
      else throw ConfigError("key 'sweep_var': expected epsilon, power_dbm or none, got '" + s + "'");
    } else if (key == "sweep_values") {
      cfg.sweep_values = json_get<std::vector<double>>(v, key);
    } else if (key == "schemes") {
      cfg.schemes.clear();
      for (const auto& s : json_get<std::vector<std::string>>(v, key)) {
        auto p = parse_scheme(s);
        if (!p) throw ConfigError("key 'schemes': unknown scheme '" + s + "'");
        cfg.schemes.push_back(*p);
      }
    } else if (key == "modes") {
      cfg.modes.clear();
      for (const auto& s : json_get<std::vector<std::string>>(v, key)) {
        auto p = parse_mode(s);
        if (!p) throw ConfigError("key 'modes': unknown mode '" + s + "'");
        cfg.modes.push_back(*p);
      }
    } else if (key == "s1_epsilon") {
      cfg.s1_epsilon = v.is_null() ? std::nullopt : std::optional<double>(json_get<double>(v, key));
    } else if (key == "epsilon") {
      cfg.epsilon = v.is_null() ? std::nullopt : std::optional<double>(json_get<double>(v, key));
    } else if (key == "eta_out") cfg.run.eta_out = json_get<double>(v, key);
    else if (key == "max_outer") cfg.run.max_outer = json_get<int>(v, key);
    else if (key == "gss_tol") cfg.run.gss_tol = json_get<double>(v, key);
    else if (key == "an_rescale") cfg.run.an_rescale = json_get<bool>(v, key);
    else if (key == "monotone_epsilon") cfg.run.monotone_epsilon = json_get<bool>(v, key);
    else if (key == "extrapolate") cfg.run.extrapolate = json_get<bool>(v, key);
    else if (key == "solver") {
      const auto s = json_get<std::string>(v, key);
      if (s == "interior-point") cfg.run.solver.method = SubproblemMethod::interior_point;
      else if (s == "projected-gradient") cfg.run.solver.method = SubproblemMethod::projected_gradient;
      else throw ConfigError("key 'solver': expected interior-point or projected-gradient, got '" + s + "'");
    } else if (key == "threads") cfg.threads = json_get<int>(v, key);
    else if (key == "record_wall_time") cfg.record_wall_time = json_get<bool>(v, key);
    else if (key == "out_dir") cfg.out_dir = json_get<std::string>(v, key);
    else if (key == "format") {
      auto f = parse_format(json_get<std::string>(v, key));
      if (!f) throw ConfigError("key 'format': expected csv, svg or both");
      cfg.format = *f;
    } else if (key == "grid_nx") cfg.grid_nx = json_get<int>(v, key);
    else if (key == "grid_ny") cfg.grid_ny = json_get<int>(v, key);
    else if (key == "beampattern_epsilon") cfg.beampattern_epsilon = json_get<double>(v, key);
    else throw ConfigError("unknown key '" + key + "'");
  }
  try {
    cfg.validate();
  } catch (const std::domain_error& ex) {
    throw ConfigError(ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  // Geometry errors surface here rather than deep inside a sweep.
  try {
    (void)ArrayGeometry::from_carrier(sc.n_x, sc.n_z, sc.carrier_hz);
  } catch (const std::exception& ex) {
    throw ConfigError(ex.what());
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ------------------------------------------------------------------------
// Sweeps
// ------------------------------------------------------------------------

struct ResultRow {
  int trial = 0;
  Scheme scheme = Scheme::proposed;
  CsiMode mode = CsiMode::perfect_eue;
  SweepVar sweep_var = SweepVar::none;
  double sweep_value = 0.0;
  double min_sr_nats = 0.0;
  double min_sr_bits = 0.0;
  double epsilon = 1.0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  std::string error;  // non-empty when the run failed; numeric fields are NaN
};

/// Canonical row order: scheme name, mode name, sweep value, trial.
inline bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::make_tuple(to_string(a.scheme), to_string(a.mode), a.sweep_value, a.trial) <
         std::make_tuple(to_string(b.scheme), to_string(b.mode), b.sweep_value, b.trial);
}

/// Options for one (scheme, mode, sweep value) run.
inline RunOptions run_options_for(const ExperimentConfig& cfg, Scheme scheme, CsiMode mode,
                                  std::optional<double> swept_epsilon) {
  RunOptions o = cfg.run;
  o.scheme = scheme;
  o.mode = mode;
  o.epsilon_override = cfg.epsilon;
  if (swept_epsilon) o.epsilon_override = swept_epsilon;
  else if (!o.epsilon_override && mode == CsiMode::unknown_eue) o.epsilon_override = cfg.s1_epsilon;
  return o;
}

/// Scenario of one trial; placements depend on (seed, trial) only, so every
/// scheme, mode and sweep point of a trial sees the same users.
inline std::pair<Scenario, ChannelSet> trial_scenario(const ExperimentConfig& cfg, int trial,
                                                      std::optional<double> power_dbm = std::nullopt) {
  ScenarioConfig sc = cfg.scenario;
  if (power_dbm) sc.p_b = dbm_to_watts(*power_dbm);
  return generate_scenario(sc, cfg.seed + static_cast<std::uint64_t>(trial));
}

inline ResultRow run_point(const ExperimentConfig& cfg, int trial, Scheme scheme, CsiMode mode, double sweep_value) {
  ResultRow row;
  row.trial = trial;
  row.scheme = scheme;
  row.mode = mode;
  row.sweep_var = cfg.sweep_var;
  row.sweep_value = sweep_value;
  try {
    std::optional<double> power;
    std::optional<double> eps;
    if (cfg.sweep_var == SweepVar::power_dbm) power = sweep_value;
    if (cfg.sweep_var == SweepVar::epsilon) eps = sweep_value;
    auto [sc, ch] = trial_scenario(cfg, trial, power);
    const auto rep = run_scheme(sc, ch, run_options_for(cfg, scheme, mode, eps));
    row.min_sr_nats = rep.min_sr_nats;
    row.min_sr_bits = nats_to_bits(rep.min_sr_nats);
    row.epsilon = rep.state.epsilon;
    row.iterations = rep.iterations;
    row.converged = rep.converged;
    row.wall_ms = cfg.record_wall_time ? rep.wall_ms : 0.0;
  } catch (const std::exception& ex) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.min_sr_nats = row.min_sr_bits = row.epsilon = nan;
    row.error = ex.what();
  }
  return row;
}

/// Every (trial, scheme, mode, sweep point) in a worker pool; rows come back
/// in canonical order whatever the scheduling.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.epsilon && cfg.sweep_var == SweepVar::epsilon)
    throw ConfigError("epsilon override conflicts with an epsilon sweep");
  struct Task {
    int trial;
    Scheme scheme;
    CsiMode mode;
    double value;
  };
  std::vector<double> values = cfg.sweep_var == SweepVar::none ? std::vector<double>{0.0} : cfg.sweep_values;
  std::vector<Task> tasks;
  for (int t = 0; t < cfg.trials; ++t)
    for (Scheme s : cfg.schemes)
      for (CsiMode m : cfg.modes)
        for (double v : values) tasks.push_back({t, s, m, v});

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      rows[i] = run_point(cfg, tasks[i].trial, tasks[i].scheme, tasks[i].mode, tasks[i].value);
  };
  unsigned n = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::stable_sort(rows.begin(), rows.end(), row_less);
  return rows;
}

struct SeriesPoint {
  double sweep_value = 0.0;
  double mean_nats = 0.0;
  double mean_bits = 0.0;
  int runs = 0;
  int failures = 0;
};

struct SeriesKey {
  Scheme scheme;
  CsiMode mode;

  std::string label() const { return std::string(to_string(scheme)) + "/" + std::string(to_string(mode)); }
  bool operator<(const SeriesKey& o) const {
    return std::make_tuple(to_string(scheme), to_string(mode)) < std::make_tuple(to_string(o.scheme), to_string(o.mode));
  }
};

/// Trial means per (scheme, mode), ordered by sweep value. Failed runs are
/// counted but left out of the mean.
inline std::map<SeriesKey, std::vector<SeriesPoint>> aggregate(const std::vector<ResultRow>& rows) {
  std::map<SeriesKey, std::map<double, SeriesPoint>> acc;
  for (const auto& r : rows) {
    auto& p = acc[{r.scheme, r.mode}][r.sweep_value];
    p.sweep_value = r.sweep_value;
    if (!r.error.empty()) {
      ++p.failures;
      continue;
    }
    p.mean_nats += r.min_sr_nats;
    ++p.runs;
  }
  std::map<SeriesKey, std::vector<SeriesPoint>> out;
  for (auto& [key, pts] : acc) {
    auto& v = out[key];
    for (auto& [x, p] : pts) {
      if (p.runs > 0) p.mean_nats /= p.runs;
      else p.mean_nats = std::numeric_limits<double>::quiet_NaN();
      p.mean_bits = nats_to_bits(p.mean_nats);
      v.push_back(p);
    }
  }
  return out;
}

}  // namespace nfsec
