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

#include "nfsec/sca.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace nfsec {

/// Lowest admissible power allocation factor; epsilon -> 0 starves the data streams.
inline constexpr double kEpsilonMin = 1e-3;

/// Link terms of one (LUE k, EUE e) pair at a fixed W.
struct PowerCoefficients {
  double a1 = 0.0;  // |h_k^H w_k|^2
  double b1 = 0.0;  // ||h_k^H W_k||^2
  double a2 = 0.0;  // |h_e^H w_k|^2
  double b2 = 0.0;  // ||h_e^H W_k||^2
  double v = 0.0;   // ||h_e^H V||^2
  int k_users = 1;
  int n_b = 1;
  double p_b = 1e-3;
  double sigma2 = 1e-13;

  static PowerCoefficients from_model(const RateModel& m, int e, int k) {
    PowerCoefficients c;
    c.a1 = m.signal_lue(k);
    c.b1 = m.interference_lue(k);
    c.a2 = m.signal_eue(e, k);
    c.b2 = m.interference_eue(e, k);
    c.v = m.leakage(e);
    c.k_users = m.k_users();
    c.n_b = m.n_b();
    c.p_b = m.budget().p_b;
    c.sigma2 = m.budget().sigma2;
    return c;
  }
};

/// R_{k,k}(eps) - R_{e,k}(eps) built from the coefficients (unclamped).
inline double secrecy_gap_of_epsilon(double eps, const PowerCoefficients& c) {
  const double es = eps * c.p_b / c.k_users;
  const double ea = (1.0 - eps) * c.p_b / c.n_b;
  const double r_k = std::log1p(es * c.a1 / (es * c.b1 + c.sigma2));
  const double r_e = std::log1p(es * c.a2 / (es * c.b2 + ea * c.v + c.sigma2));
  return r_k - r_e;
}

/// d S_{e,k} / d eps in closed form.
inline double secrecy_derivative(double eps, const PowerCoefficients& c) {
  require_epsilon(eps);
  const double K = c.k_users;
  const double N = c.n_b;
  const double P = c.p_b;
  const double s2 = c.sigma2;
  const double lue = c.a1 * s2 / ((s2 * K + c.b1 * P * eps) * (s2 * K + (c.a1 + c.b1) * P * eps));
  const double base = s2 * K * N + K * P * c.v * (1.0 - eps);
  const double eue = c.a2 * N * (s2 * N + P * c.v) /
                     ((base + c.b2 * N * P * eps) * (base + (c.a2 + c.b2) * N * P * eps));
  return K * P * (lue - eue);
}

struct ApproxRoots {
  std::optional<double> eps_minus;
  std::optional<double> eps_plus;
  bool degenerate = false;  // A2 N_b ~ K V: roots absent
};

/// Stationary points of the gap in the high-SNR, interference-free regime:
/// eps = (-K V +- sqrt(A2 N_b K V)) / (A2 N_b - K V).
inline ApproxRoots approx_roots(const PowerCoefficients& c) {
  const double kv = c.k_users * c.v;
  const double an = c.a2 * c.n_b;
  const double den = an - kv;
  ApproxRoots r;
  if (std::abs(den) <= 1e-12 * std::max(std::abs(an), std::abs(kv)) || den == 0.0) {
    r.degenerate = true;
    return r;
  }
  const double root = std::sqrt(std::max(0.0, an * kv));
  r.eps_minus = (-kv - root) / den;
  r.eps_plus = (-kv + root) / den;
  return r;
}

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

inline constexpr double kInvGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2

/// Golden-section maximization on [lo, hi]. Returns the midpoint of the final
/// bracket (width <= tol). On a non-unimodal objective this is a local maximum.
inline GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("golden_section: empty interval");
  if (!(tol > 0.0)) throw std::invalid_argument("golden_section: tolerance must be positive");
  double a = lo;
  double b = hi;
  double c = b - kInvGolden * (b - a);
  double d = a + kInvGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGolden * (b - a);
      fd = f(d);
    }
    ++it;
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it};
}

struct EpsilonUpdate {
  double epsilon = 1.0;
  MinSecrecy bottleneck;      // pair the search was run on
  double pair_value = 0.0;    // S_{e*,k*} at the new epsilon (unclamped)
  double overall_min = 0.0;   // min over all pairs at the new epsilon (unclamped)
  bool pair_switched = false; // the overall argmin moved to another pair
};

/// Power allocation for fixed W. With perfect EUE CSI the bottleneck pair at
/// `current_epsilon` is located and its gap maximized over [kEpsilonMin, 1];
/// without EUE CSI the objective is min_k R_{k,k}. An override is returned as is.
inline EpsilonUpdate optimize_epsilon(const RateModel& model, CsiMode mode, double current_epsilon,
                                      double tol = 1e-6, std::optional<double> override_epsilon = std::nullopt) {
  EpsilonUpdate out;
  if (override_epsilon) {
    require_epsilon(*override_epsilon);
    out.epsilon = *override_epsilon;
    out.bottleneck = model.min_gap(out.epsilon);
    out.pair_value = out.overall_min = out.bottleneck.value;
    return out;
  }
  if (mode == CsiMode::unknown_eue) {
    auto r = golden_section([&](double x) { return model.min_lue_rate(x); }, kEpsilonMin, 1.0, tol);
    out.epsilon = r.x;
    out.pair_value = out.overall_min = r.value;
    return out;
  }
  out.bottleneck = model.min_gap(current_epsilon);
  const int e = out.bottleneck.e;
  const int k = out.bottleneck.k;
  auto r = golden_section([&](double x) { return model.gap(e, k, x); }, kEpsilonMin, 1.0, tol);
  out.epsilon = r.x;
  out.pair_value = r.value;
  const auto after = model.min_gap(r.x);
  out.overall_min = after.value;
  out.pair_switched = after.e != e || after.k != k;
  return out;
}

}  // namespace nfsec
