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
//
// nfsec command line: run | sweep | beampattern | validate-config
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include "nfsec/nfsec.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

using namespace nfsec;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheme;
  std::optional<std::string> mode;
  std::optional<double> epsilon;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON experiment configuration");
  app->add_option("--seed", f.seed, "base RNG seed (trial t uses seed + t)");
  app->add_option("--scheme", f.scheme, "proposed | no-an | mrt-an | ffb");
  app->add_option("--mode", f.mode, "s1 (no EUE CSI) | s2 (perfect EUE CSI)");
  app->add_option("--epsilon", f.epsilon, "fixed power allocation factor in (0, 1]");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--format", f.format, "csv | svg | both");
}

/// Flags override file values, file values override defaults.
ExperimentConfig load(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? parse_config_text("") : parse_config_file(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.scheme) {
    auto s = parse_scheme(*f.scheme);
    if (!s) throw ConfigError("--scheme: unknown scheme '" + *f.scheme + "'");
    cfg.schemes = {*s};
  }
  if (f.mode) {
    auto m = parse_mode(*f.mode);
    if (!m) throw ConfigError("--mode: expected s1 or s2, got '" + *f.mode + "'");
    cfg.modes = {*m};
  }
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.out) cfg.out_dir = *f.out;
  if (f.format) {
    auto fm = parse_format(*f.format);
    if (!fm) throw ConfigError("--format: expected csv, svg or both, got '" + *f.format + "'");
    cfg.format = *fm;
  }
  cfg.validate();
  return cfg;
}

bool wants_csv(OutputFormat f) { return f != OutputFormat::svg; }
bool wants_svg(OutputFormat f) { return f != OutputFormat::csv; }

int cmd_validate(const Flags& f) {
  const auto cfg = load(f);
  std::printf("config ok: N_b = %d x %d, K = %d, E = %d, P_b = %.2f dBm, sigma2 = %.2f dBm\n", cfg.scenario.n_x,
              cfg.scenario.n_z, cfg.scenario.k_users, cfg.scenario.e_users, watts_to_dbm(cfg.scenario.p_b),
              cfg.sigma2_dbm());
  std::printf("sweep %s over %zu values, %d trials, %zu schemes, %zu modes\n",
              std::string(to_string(cfg.sweep_var)).c_str(), cfg.sweep_values.size(), cfg.trials,
              cfg.schemes.size(), cfg.modes.size());
  return 0;
}

int cmd_run(const Flags& f) {
  auto cfg = load(f);
  // A single scenario: the first scheme/mode given (proposed, s2 by default).
  const Scheme scheme = f.scheme ? cfg.schemes.front() : Scheme::proposed;
  const CsiMode mode = f.mode ? cfg.modes.front() : CsiMode::perfect_eue;
  auto [sc, ch] = trial_scenario(cfg, 0);
  const auto opts = run_options_for(cfg, scheme, mode, std::nullopt);
  const auto rep = run_scheme(sc, ch, opts);

  std::printf("scheme %s, mode %s, seed %llu\n", std::string(to_string(scheme)).c_str(),
              std::string(to_string(mode)).c_str(), static_cast<unsigned long long>(cfg.seed));
  std::printf("min SR %.6f nats (%.6f bits) at EUE %d / LUE %d, epsilon %.6f\n", rep.min_sr_nats,
              nats_to_bits(rep.min_sr_nats), rep.argmin.e, rep.argmin.k, rep.state.epsilon);
  std::printf("outer iterations %d, converged %s, solver warnings %d, %.1f ms\n", rep.iterations,
              rep.converged ? "yes" : "no", rep.solver_warnings, rep.wall_ms);
  for (std::size_t i = 0; i < rep.xi_trace.size(); ++i) std::printf("  xi[%zu] = %.9g\n", i, rep.xi_trace[i]);

  if (wants_csv(cfg.format)) {
    ResultRow row;
    row.scheme = scheme;
    row.mode = mode;
    row.min_sr_nats = rep.min_sr_nats;
    row.min_sr_bits = nats_to_bits(rep.min_sr_nats);
    row.epsilon = rep.state.epsilon;
    row.iterations = rep.iterations;
    row.converged = rep.converged;
    row.wall_ms = cfg.record_wall_time ? rep.wall_ms : 0.0;
    const std::string path = cfg.out_dir + "/run.csv";
    emit_csv({row}, path);
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_sweep(const Flags& f) {
  const auto cfg = load(f);
  const auto rows = run_sweep(cfg);
  int failures = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      ++failures;
      std::fprintf(stderr, "run failed (trial %d, %s/%s, %s = %g): %s\n", r.trial,
                   std::string(to_string(r.scheme)).c_str(), std::string(to_string(r.mode)).c_str(),
                   std::string(to_string(r.sweep_var)).c_str(), r.sweep_value, r.error.c_str());
    }
  if (wants_csv(cfg.format)) {
    emit_csv(rows, cfg.out_dir + "/sweep.csv");
    emit_summary_csv(rows, cfg.out_dir + "/summary.csv");
    std::printf("wrote %s/sweep.csv and %s/summary.csv\n", cfg.out_dir.c_str(), cfg.out_dir.c_str());
  }
  if (wants_svg(cfg.format)) {
    emit_plot(rows, cfg.out_dir + "/sweep.svg");
    std::printf("wrote %s/sweep.svg\n", cfg.out_dir.c_str());
  }
  for (const auto& [key, pts] : aggregate(rows)) {
    std::printf("%-14s", key.label().c_str());
    for (const auto& p : pts) std::printf(" %g:%.4f", p.sweep_value, p.mean_bits);
    std::printf("  [bits/s/Hz]\n");
  }
  if (failures == static_cast<int>(rows.size())) return 2;
  return 0;
}

int cmd_beampattern(const Flags& f) {
  auto cfg = load(f);
  const Scheme scheme = f.scheme ? cfg.schemes.front() : Scheme::proposed;
  const CsiMode mode = f.mode ? cfg.modes.front() : CsiMode::perfect_eue;
  auto [sc, ch] = trial_scenario(cfg, 0);
  auto opts = run_options_for(cfg, scheme, mode, std::nullopt);
  if (scheme != Scheme::no_an) opts.epsilon_override = cfg.epsilon.value_or(cfg.beampattern_epsilon);
  const auto rep = run_scheme(sc, ch, opts);
  const BeamGrid grid{cfg.grid_nx, cfg.grid_ny, sc.cell};
  const std::string prefix = cfg.out_dir + "/beampattern";
  const auto bp = emit_beam_pattern(sc, rep.state, grid, prefix, cfg.format);

  // Complementarity at the cell corner farthest from every LUE.
  const Point2 corners[4] = {{sc.cell.x_min, sc.cell.y_min}, {sc.cell.x_max, sc.cell.y_min},
                             {sc.cell.x_min, sc.cell.y_max}, {sc.cell.x_max, sc.cell.y_max}};
  double best = -1.0;
  Point2 far{};
  for (const auto& c : corners) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& u : sc.lues) {
      const auto p = cell_position(u, sc.bs);
      nearest = std::min(nearest, std::hypot(p.x - c.x, p.y - c.y));
    }
    if (std::hypot(c.x - sc.bs.x, c.y - sc.bs.y) > 1.0 && nearest > best) {
      best = nearest;
      far = c;
    }
  }
  const auto s = beam_power_at(sc, rep.state, far);
  std::printf("grid %d x %d, epsilon %.3f, min SR %.4f nats\n", grid.nx, grid.ny, rep.state.epsilon, rep.min_sr_nats);
  std::printf("corner (%.0f, %.0f): signal %.3e W, AN %.3e W (AN %s signal)\n", far.x, far.y, s.signal, s.an,
              s.an > s.signal ? ">" : "<=");
  std::printf("peak signal %.3e W, peak AN %.3e W\n", bp.signal.maxCoeff(), bp.an.maxCoeff());
  std::printf("wrote %s.*\n", prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nfsec: secure near-field XL-MIMO downlink experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto* run = app.add_subcommand("run", "optimize one seeded scenario and print the report");
  auto* sweep = app.add_subcommand("sweep", "run the configured sweep and write CSV/SVG artifacts");
  auto* beam = app.add_subcommand("beampattern", "signal and AN power maps over the cell");
  auto* validate = app.add_subcommand("validate-config", "parse and check a configuration");
  for (auto* sub : {run, sweep, beam, validate}) add_flags(sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*beam) return cmd_beampattern(flags);
    if (*validate) return cmd_validate(flags);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
