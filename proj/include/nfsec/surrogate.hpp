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

#include "nfsec/secrecy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace nfsec {

// ------------------------------------------------------------------------
// Bounds on ln(1 + ||g1||^2 / (||g2||^2 + sigma2))
// ------------------------------------------------------------------------

using CRow = Eigen::RowVectorXcd;

inline double log_sinr_term(const CRow& g1, const CRow& g2, double sigma2) {
  return std::log1p(g1.squaredNorm() / (g2.squaredNorm() + sigma2));
}

/// Concave minorant, tight at (g1_t, g2_t). Linear in g1 through
/// 2 Re[g1 g1_t^H], minus a convex quadratic in (g1, g2). Written as
/// deviations from the expansion point so that tightness survives rounding.
inline double f1_lower(const CRow& g1, const CRow& g2, const CRow& g1_t, const CRow& g2_t, double sigma2) {
  const double a = g1_t.squaredNorm();
  const double b = g2_t.squaredNorm();
  const double s = sigma2;
  const double lin = g1.dot(g1_t).real();  // Eigen's dot conjugates the first argument
  const double dq = (g1.squaredNorm() - a) + (g2.squaredNorm() - b);
  return std::log1p(a / (b + s)) + 2.0 * (lin - a) / (b + s) - a * dq / ((a + b + s) * (b + s));
}

/// Convex majorant, tight at (g1_t, g2_t), with g2 entering through the
/// linearization -2 Re[g2 g2_t^H] / sigma2.
inline double f2_upper(const CRow& g1, const CRow& g2, const CRow& g1_t, const CRow& g2_t, double sigma2) {
  const double a = g1_t.squaredNorm();
  const double b = g2_t.squaredNorm();
  const double s = sigma2;
  const double y = g2.squaredNorm();
  const double dq = (g1.squaredNorm() - a) + (y - b);
  const double dev = g2.size() > 0 ? (g2 - g2_t).squaredNorm() : 0.0;
  return std::log1p(a / (b + s)) + dq / (a + b + s) - (y - b) / (b + s) + dev / s;
}

// ------------------------------------------------------------------------
// Surrogate of the secrecy gap around an expansion point
// ------------------------------------------------------------------------

enum class CsiMode { unknown_eue, perfect_eue };

/// sigma_eps^2 for every LUE and EUE at the current power split.
struct EffectiveNoise {
  Eigen::VectorXd lue;
  Eigen::VectorXd eue;
};

inline EffectiveNoise effective_noises(const ChannelSet& ch, const CMat& v, double epsilon, const LinkBudget& lb) {
  const auto split = power_split(epsilon, lb.p_b, ch.k_users(), ch.n_b());
  EffectiveNoise out;
  out.lue = Eigen::VectorXd::Constant(ch.k_users(), lb.sigma2 / split.eps_s);
  out.eue.resize(ch.e_users());
  for (int e = 0; e < ch.e_users(); ++e) out.eue(e) = effective_noise(true, ch.eue.col(e), v, split.eps_s, split.eps_a, lb.sigma2);
  return out;
}

/// Expansion point W^(t) with the per-user scalars the bounds need.
struct SurrogatePoint {
  CMat w_t;
  EffectiveNoise noise;
  Eigen::VectorXd lue_signal;        // |h_k^H w_k^(t)|^2
  Eigen::VectorXd lue_interference;  // ||h_k^H W_k^(t)||^2
  Eigen::MatrixXd eue_signal;        // (e, k): |h_e^H w_k^(t)|^2
  Eigen::MatrixXd eue_interference;  // (e, k): ||h_e^H W_k^(t)||^2

  SurrogatePoint(const ChannelSet& ch, CMat w, EffectiveNoise n) : w_t(std::move(w)), noise(std::move(n)) {
    const CMat xl = ch.lue.adjoint() * w_t;
    const CMat xe = ch.eue.adjoint() * w_t;
    const int k_users = static_cast<int>(w_t.cols());
    lue_signal.resize(k_users);
    lue_interference.resize(k_users);
    for (int k = 0; k < k_users; ++k) {
      lue_signal(k) = std::norm(xl(k, k));
      lue_interference(k) = std::max(0.0, xl.row(k).squaredNorm() - lue_signal(k));
    }
    eue_signal.resize(xe.rows(), k_users);
    eue_interference.resize(xe.rows(), k_users);
    for (Eigen::Index e = 0; e < xe.rows(); ++e)
      for (int k = 0; k < k_users; ++k) {
        eue_signal(e, k) = std::norm(xe(e, k));
        eue_interference(e, k) = std::max(0.0, xe.row(e).squaredNorm() - eue_signal(e, k));
      }
  }
};

namespace detail {

/// (h^H w_k, h^H W_k) for a channel column and a precoder.
inline std::pair<CRow, CRow> split_stream(const CVec& h, const CMat& w, int k) {
  const CRow x = h.adjoint() * w;
  CRow g1(1);
  g1(0) = x(k);
  CRow g2(x.size() - 1);
  for (Eigen::Index j = 0, c = 0; j < x.size(); ++j)
    if (j != k) g2(c++) = x(j);
  return {g1, g2};
}

}  // namespace detail

/// g_{k,e}(W) = f1(h_k^H w_k, h_k^H W_k) - f2(h_e^H w_k, h_e^H W_k), with the LUE
/// sigma_eps^2 inside f1 and the EUE one inside f2. Pass e < 0 to drop the
/// eavesdropper term (unknown EUE CSI).
inline double pair_surrogate(int k, int e, const CMat& w, const SurrogatePoint& pt, const ChannelSet& ch) {
  const auto [g1, g2] = detail::split_stream(ch.lue.col(k), w, k);
  const auto [g1t, g2t] = detail::split_stream(ch.lue.col(k), pt.w_t, k);
  double value = f1_lower(g1, g2, g1t, g2t, pt.noise.lue(k));
  if (e >= 0) {
    const auto [q1, q2] = detail::split_stream(ch.eue.col(e), w, k);
    const auto [q1t, q2t] = detail::split_stream(ch.eue.col(e), pt.w_t, k);
    value -= f2_upper(q1, q2, q1t, q2t, pt.noise.eue(e));
  }
  return value;
}

/// Coefficients of f1 for LUE k in normalized units:
/// f1 = constant + alpha Re[conj(c_t) x_kk] - gamma sum_j |x_kj|^2.
struct LowerTerm {
  double constant = 0.0;
  double alpha = 0.0;
  cd c_t;
  double gamma = 0.0;
};

/// Coefficients of f2 for (EUE e, stream k), y = h_e^H W:
/// f2 = constant + mu sum_j |y_j|^2 - two_over_s Re sum_{j!=k} conj(y_t,j) y_j + nu sum_{j!=k} |y_j|^2.
struct UpperTerm {
  double constant = 0.0;
  double mu = 0.0;
  double two_over_s = 0.0;
  double nu = 0.0;
  CRow y_t;
};

/// Softened max-min objective over all (k, e) surrogates, evaluated on
/// channels normalized by their largest column norm (the bounds are invariant
/// when h and sigma_eps^2 are scaled by c and c^2).
class SurrogateObjective {
 public:
  SurrogateObjective(const SurrogatePoint& pt, const ChannelSet& ch, CsiMode mode)
      : k_users_(ch.k_users()), e_users_(mode == CsiMode::perfect_eue ? ch.e_users() : 0) {
    double scale = 0.0;
    for (int k = 0; k < ch.k_users(); ++k) scale = std::max(scale, ch.lue.col(k).norm());
    for (int e = 0; e < e_users_; ++e) scale = std::max(scale, ch.eue.col(e).norm());
    if (!(scale > 0.0)) scale = 1.0;
    const double scale2 = scale * scale;

    h_all_.resize(ch.n_b(), k_users_ + e_users_);
    h_all_.leftCols(k_users_) = ch.lue / scale;
    if (e_users_ > 0) h_all_.rightCols(e_users_) = ch.eue.leftCols(e_users_) / scale;
    const CMat x_t = h_all_.adjoint() * pt.w_t;

    for (int k = 0; k < k_users_; ++k) {
      const double a = pt.lue_signal(k) / scale2;
      const double b = pt.lue_interference(k) / scale2;
      const double s = pt.noise.lue(k) / scale2;
      LowerTerm t;
      t.constant = std::log1p(a / (b + s)) - (a + s) / (b + s) + s / (a + b + s);
      t.alpha = 2.0 / (b + s);
      t.c_t = x_t(k, k);
      t.gamma = a / ((a + b + s) * (b + s));
      lower_.push_back(t);
    }
    for (int e = 0; e < e_users_; ++e)
      for (int k = 0; k < k_users_; ++k) {
        const double a = pt.eue_signal(e, k) / scale2;
        const double b = pt.eue_interference(e, k) / scale2;
        const double s = pt.noise.eue(e) / scale2;
        UpperTerm t;
        t.constant = std::log1p(a / (b + s)) + b / s - a * s / ((a + b + s) * (b + s));
        t.mu = 1.0 / (a + b + s);
        t.two_over_s = 2.0 / s;
        t.nu = b / ((b + s) * s);
        t.y_t = x_t.row(k_users_ + e);
        upper_.push_back(t);
      }
    values_.resize(pair_count());
  }

  int k_users() const { return k_users_; }
  int e_users() const { return e_users_; }
  /// Normalized [H_lue H_eue] (EUE columns only with EUE CSI).
  const CMat& h_all() const { return h_all_; }
  const std::vector<LowerTerm>& lower_terms() const { return lower_; }
  const std::vector<UpperTerm>& upper_terms() const { return upper_; }

  int pair_count() const { return e_users_ > 0 ? k_users_ * e_users_ : k_users_; }

  /// Surrogate value of every pair; pair index is e * K + k (or k without EUEs).
  const std::vector<double>& pair_values(const CMat& w) {
    x_ = h_all_.adjoint() * w;
    std::vector<double> f1(k_users_);
    for (int k = 0; k < k_users_; ++k) {
      const auto& t = lower_[k];
      f1[k] = t.constant + t.alpha * (std::conj(t.c_t) * x_(k, k)).real() - t.gamma * x_.row(k).squaredNorm();
    }
    if (e_users_ == 0) {
      for (int k = 0; k < k_users_; ++k) values_[k] = f1[k];
      return values_;
    }
    for (int e = 0; e < e_users_; ++e) {
      const auto y = x_.row(k_users_ + e);
      const double all = y.squaredNorm();
      for (int k = 0; k < k_users_; ++k) {
        const auto& t = upper_[e * k_users_ + k];
        const double off = all - std::norm(y(k));
        const double lin = (t.y_t.conjugate().cwiseProduct(y)).sum().real() - (std::conj(t.y_t(k)) * y(k)).real();
        const double f2 = t.constant + t.mu * all - t.two_over_s * lin + t.nu * off;
        values_[e * k_users_ + k] = f1[k] - f2;
      }
    }
    return values_;
  }

  double min_value(const CMat& w) {
    const auto& v = pair_values(w);
    return *std::min_element(v.begin(), v.end());
  }

  /// -tau log sum exp(-g_i / tau); fills `grad` with 2 dF/d(conj W) when non-null.
  double soft_min(const CMat& w, double tau, CMat* grad) {
    const auto& v = pair_values(w);
    const double gmin = *std::min_element(v.begin(), v.end());
    std::vector<double> weight(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      weight[i] = std::exp(-(v[i] - gmin) / tau);
      z += weight[i];
    }
    const double value = gmin - tau * std::log(z);
    if (grad == nullptr) return value;

    CMat d = CMat::Zero(h_all_.cols(), w.cols());
    std::vector<double> lower_weight(k_users_, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) lower_weight[i % k_users_] += weight[i] / z;
    for (int k = 0; k < k_users_; ++k) {
      const double p = lower_weight[k];
      if (p == 0.0) continue;
      const auto& t = lower_[k];
      d(k, k) += p * t.alpha * t.c_t;
      d.row(k) -= (p * 2.0 * t.gamma) * x_.row(k);
    }
    for (int e = 0; e < e_users_; ++e) {
      const int r = k_users_ + e;
      for (int k = 0; k < k_users_; ++k) {
        const double p = weight[e * k_users_ + k] / z;
        if (p == 0.0) continue;
        const auto& t = upper_[e * k_users_ + k];
        for (int j = 0; j < k_users_; ++j) {
          cd g = -2.0 * t.mu * x_(r, j);
          if (j != k) g += t.two_over_s * t.y_t(j) - 2.0 * t.nu * x_(r, j);
          d(r, j) += p * g;
        }
      }
    }
    *grad = h_all_ * d;
    return value;
  }

 private:
  int k_users_;
  int e_users_;
  CMat h_all_;
  std::vector<LowerTerm> lower_;
  std::vector<UpperTerm> upper_;
  CMat x_;
  std::vector<double> values_;
};

}  // namespace nfsec
