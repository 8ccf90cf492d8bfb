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

#include "nfsec/power.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nfsec {

enum class Scheme { proposed, no_an, mrt_an, ffb };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::no_an: return "no-an";
    case Scheme::mrt_an: return "mrt-an";
    case Scheme::ffb: return "ffb";
  }
  return "?";
}

inline std::string_view to_string(CsiMode m) { return m == CsiMode::perfect_eue ? "s2" : "s1"; }

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "proposed") return Scheme::proposed;
  if (s == "no-an") return Scheme::no_an;
  if (s == "mrt-an") return Scheme::mrt_an;
  if (s == "ffb") return Scheme::ffb;
  return std::nullopt;
}

inline std::optional<CsiMode> parse_mode(std::string_view s) {
  if (s == "s1" || s == "S1") return CsiMode::unknown_eue;
  if (s == "s2" || s == "S2") return CsiMode::perfect_eue;
  return std::nullopt;
}

struct RunOptions {
  CsiMode mode = CsiMode::perfect_eue;
  Scheme scheme = Scheme::proposed;
  double eta_out = 1e-4;
  int max_outer = 50;
  std::optional<double> epsilon_override;
  double gss_tol = 1e-6;
  double tol_opt = 1e-5;
  bool an_rescale = false;
  // Keep the previous epsilon when the bottleneck-pair update lowers the
  // minimum over all pairs.
  bool monotone_epsilon = true;
  // Try W_t + beta (W_sca - W_t) for beta = 2, 4, ... and keep the best point
  // under the true objective. Off reproduces plain SCA steps.
  bool extrapolate = true;
  double max_extrapolation = 256.0;
  SolverOptions solver;

  void validate() const {
    if (!(eta_out > 0.0)) throw ConfigError("eta_out must be positive");
    if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
    if (epsilon_override) require_epsilon(*epsilon_override);
  }
};

struct SolutionReport {
  Scheme scheme = Scheme::proposed;
  CsiMode mode = CsiMode::perfect_eue;
  std::vector<double> xi_trace;  // mode objective (unclamped) after init and each outer iteration
  PrecodingState state;
  double min_sr_nats = 0.0;      // clamped, always against the true EUE channels
  MinSecrecy argmin;
  Eigen::MatrixXd pair_sr;       // (e, k) clamped secrecy rates
  bool converged = false;
  int iterations = 0;
  int solver_warnings = 0;
  int pair_switches = 0;
  double max_radiated_power = 0.0;
  double wall_ms = 0.0;
};

/// Optimization objective of the given mode: min gap over (e, k) with EUE CSI,
/// min_k R_{k,k} without.
inline double mode_objective(const RateModel& m, CsiMode mode, double epsilon) {
  return mode == CsiMode::perfect_eue ? m.min_gap(epsilon).value : m.min_lue_rate(epsilon);
}

namespace detail {

inline void finalize(SolutionReport& rep, const ChannelSet& ch, const LinkBudget& lb,
                     std::chrono::steady_clock::time_point start) {
  const RateModel m(ch, rep.state.w, rep.state.v, lb);
  rep.argmin = m.min_secrecy(rep.state.epsilon);
  rep.min_sr_nats = rep.argmin.value;
  rep.pair_sr.resize(ch.e_users(), ch.k_users());
  for (int e = 0; e < ch.e_users(); ++e)
    for (int k = 0; k < ch.k_users(); ++k) rep.pair_sr(e, k) = std::max(0.0, m.gap(e, k, rep.state.epsilon));
  rep.max_radiated_power = std::max(rep.max_radiated_power, radiated_power(rep.state, lb.p_b));
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

inline bool relative_change_below(double now, double before, double eta) {
  const double change = std::abs(now - before);
  if (before == 0.0) return change < eta;
  return change / std::abs(before) < eta;
}

/// Doubling search along the SCA step; every candidate is scaled back into
/// the power ball. Returns `w_sca` unless a longer step is strictly better.
inline CMat extrapolate_step(const CMat& w_prev, CMat w_sca, const ChannelSet& ch, const CMat& v, const LinkBudget& lb,
                             const RunOptions& opts, double epsilon) {
  const double budget = static_cast<double>(w_prev.cols());
  auto score = [&](const CMat& w) { return mode_objective(RateModel(ch, w, v, lb), opts.mode, epsilon); };
  const CMat dir = w_sca - w_prev;
  double best = score(w_sca);
  for (double beta = 2.0; beta <= opts.max_extrapolation; beta *= 2.0) {
    CMat cand = w_prev + beta * dir;
    const double n2 = cand.squaredNorm();
    if (n2 > budget) cand *= std::sqrt(budget / n2);
    const double val = score(cand);
    if (!(val > best)) break;
    best = val;
    w_sca = std::move(cand);
  }
  return w_sca;
}

/// Epsilon step shared by all schemes; respects the monotone guard.
inline double update_epsilon(const RateModel& m, const RunOptions& opts, double current, SolutionReport& rep) {
  if (opts.epsilon_override) return *opts.epsilon_override;
  const auto upd = optimize_epsilon(m, opts.mode, current, opts.gss_tol);
  if (upd.pair_switched) ++rep.pair_switches;
  if (opts.monotone_epsilon && mode_objective(m, opts.mode, upd.epsilon) < mode_objective(m, opts.mode, current))
    return current;
  return upd.epsilon;
}

}  // namespace detail

/// Alternating optimization: RZF initialization with epsilon = 1, then
/// repeated SCA beamfocusing rounds and power-allocation updates until the
/// relative change of the objective drops below eta_out.
inline SolutionReport run_algorithm1(const Scenario& sc, const ChannelSet& ch, const RunOptions& opts) {
  opts.validate();
  const auto start = std::chrono::steady_clock::now();
  const LinkBudget lb{sc.p_b, sc.sigma2};

  SolutionReport rep;
  rep.scheme = opts.scheme;
  rep.mode = opts.mode;
  rep.state.v = null_space_an(ch.h_b(), opts.an_rescale);
  rep.state.w = rzf_init(ch.h_b(), sc.sigma2);
  rep.state.epsilon = opts.epsilon_override.value_or(1.0);
  rep.max_radiated_power = radiated_power(rep.state, lb.p_b);

  double xi_prev = mode_objective(RateModel(ch, rep.state.w, rep.state.v, lb), opts.mode, rep.state.epsilon);
  rep.xi_trace.push_back(xi_prev);

  for (int t = 1; t <= opts.max_outer; ++t) {
    auto round = sca_round(rep.state, ch, lb, opts.mode, opts.solver);
    if (round.solver_warning) ++rep.solver_warnings;
    if (opts.extrapolate)
      round.w = detail::extrapolate_step(rep.state.w, std::move(round.w), ch, rep.state.v, lb, opts, rep.state.epsilon);
    rep.state.w = std::move(round.w);

    const RateModel m(ch, rep.state.w, rep.state.v, lb);
    rep.state.epsilon = detail::update_epsilon(m, opts, rep.state.epsilon, rep);
    rep.max_radiated_power = std::max(rep.max_radiated_power, radiated_power(rep.state, lb.p_b));

    const double xi = mode_objective(m, opts.mode, rep.state.epsilon);
    rep.xi_trace.push_back(xi);
    rep.iterations = t;
    if (detail::relative_change_below(xi, xi_prev, opts.eta_out)) {
      rep.converged = true;
      break;
    }
    xi_prev = xi;
  }
  detail::finalize(rep, ch, lb, start);
  return rep;
}

/// Fixed beamfocusing matrix; only epsilon is optimized (repeated bottleneck
/// updates until the allocation stops moving).
inline SolutionReport run_fixed_beam(const Scenario& sc, const ChannelSet& ch, CMat w, const RunOptions& opts) {
  opts.validate();
  const auto start = std::chrono::steady_clock::now();
  const LinkBudget lb{sc.p_b, sc.sigma2};
  SolutionReport rep;
  rep.scheme = opts.scheme;
  rep.mode = opts.mode;
  rep.state.v = null_space_an(ch.h_b(), opts.an_rescale);
  rep.state.w = std::move(w);
  rep.state.epsilon = opts.epsilon_override.value_or(1.0);
  const RateModel m(ch, rep.state.w, rep.state.v, lb);
  rep.xi_trace.push_back(mode_objective(m, opts.mode, rep.state.epsilon));
  rep.max_radiated_power = radiated_power(rep.state, lb.p_b);
  for (int t = 1; t <= opts.max_outer; ++t) {
    const double next = detail::update_epsilon(m, opts, rep.state.epsilon, rep);
    const bool moved = std::abs(next - rep.state.epsilon) > opts.gss_tol;
    rep.state.epsilon = next;
    rep.xi_trace.push_back(mode_objective(m, opts.mode, rep.state.epsilon));
    rep.iterations = t;
    if (!moved) {
      rep.converged = true;
      break;
    }
  }
  rep.max_radiated_power = std::max(rep.max_radiated_power, radiated_power(rep.state, lb.p_b));
  detail::finalize(rep, ch, lb, start);
  return rep;
}

inline SolutionReport run_scheme(const Scenario& sc, const ChannelSet& ch, const RunOptions& opts) {
  RunOptions o = opts;
  switch (opts.scheme) {
    case Scheme::proposed:
      return run_algorithm1(sc, ch, o);
    case Scheme::no_an:
      o.epsilon_override = 1.0;
      return run_algorithm1(sc, ch, o);
    case Scheme::mrt_an:
      return run_fixed_beam(sc, ch, mrt_beamfocus(ch.h_b()), o);
    case Scheme::ffb:
      return run_fixed_beam(sc, ch, ff_beamform(sc.geometry, sc.lues, sc.sigma2), o);
  }
  throw std::invalid_argument("unknown scheme");
}

}  // namespace nfsec
