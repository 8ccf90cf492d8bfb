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

#include "nfsec/precoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nfsec {

// All rates are in nats per channel use.

struct LinkBudget {
  double p_b = 1e-3;    // W
  double sigma2 = 0.0;  // W
};

struct UeId {
  UeRole role = UeRole::lue;
  int index = 0;

  static UeId lue(int k) { return {UeRole::lue, k}; }
  static UeId eue(int e) { return {UeRole::eue, e}; }
};

/// ||h^H V||^2
inline double an_leakage(const CVec& h, const CMat& v) { return (v.adjoint() * h).squaredNorm(); }

/// sigma_eps^2 = (1_EUE eps_a ||h^H V||^2 + sigma2) / eps_s.
inline double effective_noise(bool is_eue, const CVec& h, const CMat& v, double eps_s, double eps_a,
                              double sigma2) {
  if (!(eps_s > 0.0)) throw std::domain_error("effective_noise: data power eps_s must be positive");
  const double an = (is_eue && eps_a > 0.0) ? eps_a * an_leakage(h, v) : 0.0;
  return (an + sigma2) / eps_s;
}

struct RateBreakdown {
  double signal_power = 0.0;  // |h^H w_k|^2
  double interference = 0.0;  // sum_{j != k} |h^H w_j|^2
  double an_power = 0.0;      // ||h^H V||^2, zero for LUEs
  double sigma_eps2 = 0.0;
  double rate_nats = 0.0;

  double sinr() const { return signal_power / (interference + sigma_eps2); }
};

inline CVec channel_of(const ChannelSet& ch, UeId u) {
  const CMat& m = (u.role == UeRole::lue) ? ch.lue : ch.eue;
  if (u.index < 0 || u.index >= m.cols()) throw std::out_of_range("UE index out of range");
  return m.col(u.index);
}

/// Rate of UE u decoding stream k, in the normalized form
/// ln(1 + |h^H w_k|^2 / (||h^H W_k||^2 + sigma_eps^2)).
inline RateBreakdown rate_breakdown(UeId u, int k, const ChannelSet& ch, const PrecodingState& st,
                                    const LinkBudget& lb) {
  if (k < 0 || k >= st.w.cols()) throw std::out_of_range("stream index out of range");
  const CVec h = channel_of(ch, u);
  const auto split = power_split(st.epsilon, lb.p_b, static_cast<int>(st.w.cols()), static_cast<int>(st.w.rows()));
  const Eigen::RowVectorXcd x = h.adjoint() * st.w;
  RateBreakdown r;
  r.signal_power = std::norm(x(k));
  r.interference = x.squaredNorm() - r.signal_power;
  if (r.interference < 0.0) r.interference = 0.0;
  const bool is_eue = u.role == UeRole::eue;
  r.an_power = (is_eue && split.eps_a > 0.0) ? an_leakage(h, st.v) : 0.0;
  r.sigma_eps2 = (split.eps_a * r.an_power + lb.sigma2) / split.eps_s;
  r.rate_nats = std::log1p(r.signal_power / (r.interference + r.sigma_eps2));
  return r;
}

inline double rate(UeId u, int k, const ChannelSet& ch, const PrecodingState& st, const LinkBudget& lb) {
  return rate_breakdown(u, k, ch, st, lb).rate_nats;
}

/// Same rate written with explicit per-stream powers and per-column AN sums,
/// ln(1 + eps_s|h^H w_k|^2 / (eps_s sum_j |h^H w_j|^2 + 1_EUE eps_a sum_n |h^H v_n|^2 + sigma2)).
inline double rate_power_form(UeId u, int k, const ChannelSet& ch, const PrecodingState& st,
                              const LinkBudget& lb) {
  const CVec h = channel_of(ch, u);
  const auto split = power_split(st.epsilon, lb.p_b, static_cast<int>(st.w.cols()), static_cast<int>(st.w.rows()));
  double signal = 0.0;
  double interference = 0.0;
  for (Eigen::Index j = 0; j < st.w.cols(); ++j) {
    const double p = split.eps_s * std::norm(h.dot(st.w.col(j)));
    if (j == k) signal = p;
    else interference += p;
  }
  double an = 0.0;
  if (u.role == UeRole::eue)
    for (Eigen::Index n = 0; n < st.v.cols(); ++n) an += split.eps_a * std::norm(h.dot(st.v.col(n)));
  return std::log1p(signal / (interference + an + lb.sigma2));
}

/// R_{k,k} - R_{e,k} without the [.]^+ clamp.
inline double secrecy_gap(int e, int k, const ChannelSet& ch, const PrecodingState& st, const LinkBudget& lb) {
  return rate(UeId::lue(k), k, ch, st, lb) - rate(UeId::eue(e), k, ch, st, lb);
}

inline double secrecy_rate(int e, int k, const ChannelSet& ch, const PrecodingState& st, const LinkBudget& lb) {
  return std::max(0.0, secrecy_gap(e, k, ch, st, lb));
}

struct MinSecrecy {
  double value = 0.0;
  int e = 0;
  int k = 0;
};

/// Precomputed link terms for a fixed W and V; rates for any epsilon follow
/// in O(1). Row k of `x_lue` is h_k^H W, row e of `x_eue` is h_e^H W.
class RateModel {
 public:
  RateModel(const ChannelSet& ch, const CMat& w, const CMat& v, const LinkBudget& lb)
      : x_lue_(ch.lue.adjoint() * w), x_eue_(ch.eue.adjoint() * w), leak_(ch.e_users()), lb_(lb),
        k_users_(static_cast<int>(w.cols())), n_b_(static_cast<int>(w.rows())) {
    const CMat hv = v.adjoint() * ch.eue;
    for (int e = 0; e < ch.e_users(); ++e) leak_(e) = hv.col(e).squaredNorm();
  }

  int k_users() const { return k_users_; }
  int e_users() const { return static_cast<int>(x_eue_.rows()); }
  int n_b() const { return n_b_; }
  const LinkBudget& budget() const { return lb_; }

  double signal_lue(int k) const { return std::norm(x_lue_(k, k)); }
  double interference_lue(int k) const { return std::max(0.0, x_lue_.row(k).squaredNorm() - signal_lue(k)); }
  double signal_eue(int e, int k) const { return std::norm(x_eue_(e, k)); }
  double interference_eue(int e, int k) const {
    return std::max(0.0, x_eue_.row(e).squaredNorm() - signal_eue(e, k));
  }
  double leakage(int e) const { return leak_(e); }

  double lue_rate(int k, double epsilon) const {
    const auto split = power_split(epsilon, lb_.p_b, k_users_, n_b_);
    return std::log1p(signal_lue(k) / (interference_lue(k) + lb_.sigma2 / split.eps_s));
  }

  double eue_rate(int e, int k, double epsilon) const {
    const auto split = power_split(epsilon, lb_.p_b, k_users_, n_b_);
    const double noise = (split.eps_a * leak_(e) + lb_.sigma2) / split.eps_s;
    return std::log1p(signal_eue(e, k) / (interference_eue(e, k) + noise));
  }

  double gap(int e, int k, double epsilon) const { return lue_rate(k, epsilon) - eue_rate(e, k, epsilon); }

  /// Minimum clamped secrecy rate; ties go to the lexicographically first (e, k).
  MinSecrecy min_secrecy(double epsilon) const {
    MinSecrecy best{std::numeric_limits<double>::infinity(), 0, 0};
    for (int e = 0; e < e_users(); ++e)
      for (int k = 0; k < k_users_; ++k) {
        const double s = std::max(0.0, gap(e, k, epsilon));
        if (s < best.value) best = {s, e, k};
      }
    return best;
  }

  /// Minimum unclamped gap, the quantity the optimizer works on.
  MinSecrecy min_gap(double epsilon) const {
    MinSecrecy best{std::numeric_limits<double>::infinity(), 0, 0};
    for (int e = 0; e < e_users(); ++e)
      for (int k = 0; k < k_users_; ++k) {
        const double s = gap(e, k, epsilon);
        if (s < best.value) best = {s, e, k};
      }
    return best;
  }

  double min_lue_rate(double epsilon) const {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_users_; ++k) best = std::min(best, lue_rate(k, epsilon));
    return best;
  }

 private:
  CMat x_lue_;
  CMat x_eue_;
  Eigen::VectorXd leak_;
  LinkBudget lb_;
  int k_users_;
  int n_b_;
};

inline MinSecrecy min_secrecy_rate(const ChannelSet& ch, const PrecodingState& st, const LinkBudget& lb) {
  return RateModel(ch, st.w, st.v, lb).min_secrecy(st.epsilon);
}

}  // namespace nfsec
