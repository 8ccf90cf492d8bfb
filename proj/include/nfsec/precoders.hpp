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

#include "nfsec/channel.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <string>

namespace nfsec {

/// Beamfocusing matrix W (N_b x K), AN matrix V (N_b x N_b) and the share
/// epsilon of the power budget spent on data.
struct PrecodingState {
  CMat w;
  CMat v;
  double epsilon = 1.0;
};

class RankDeficientError : public std::runtime_error {
 public:
  explicit RankDeficientError(double condition)
      : std::runtime_error("LUE channel matrix is rank deficient (Gram condition number " +
                           std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Condition number of H^H H (ratio of extreme eigenvalues).
inline double gram_condition(const CMat& h) {
  const CMat gram = h.adjoint() * h;
  Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0)) return std::numeric_limits<double>::infinity();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline constexpr double kRegularizeCondition = 1e10;
inline constexpr double kSingularCondition = 1e14;

/// Orthogonal projector onto the complement of span(H_b):
/// V = I - H (H^H H)^{-1} H^H. A Tikhonov term is added to the Gram matrix
/// when its condition number exceeds 1e10; beyond 1e14 the matrix is treated
/// as rank deficient. `rescale` multiplies V by sqrt(N_b / (N_b - K)) so that
/// tr(V^H V) = N_b.
inline CMat null_space_an(const CMat& h_b, bool rescale = false) {
  const Eigen::Index n = h_b.rows();
  const Eigen::Index k = h_b.cols();
  if (k == 0) return CMat::Identity(n, n);
  if (k >= n) throw RankDeficientError(std::numeric_limits<double>::infinity());
  const double cond = gram_condition(h_b);
  if (!(cond <= kSingularCondition)) throw RankDeficientError(cond);
  CMat gram = h_b.adjoint() * h_b;
  if (cond > kRegularizeCondition) {
    const double ridge = 1e-12 * gram.trace().real() / static_cast<double>(k);
    gram.diagonal().array() += ridge;
  }
  const CMat proj = h_b * gram.ldlt().solve(h_b.adjoint());
  CMat v = CMat::Identity(n, n) - proj;
  // Symmetrize away rounding so V == V^H holds to machine precision.
  v = (0.5 * (v + v.adjoint())).eval();
  if (rescale) v *= std::sqrt(static_cast<double>(n) / static_cast<double>(n - k));
  return v;
}

/// Scales W so that ||W||_F^2 = K. A zero matrix is returned unchanged.
inline CMat normalize_power(CMat w) {
  const double f = w.norm();
  if (f > 0.0) w *= std::sqrt(static_cast<double>(w.cols())) / f;
  return w;
}

/// Regularized zero forcing (H H^H + sigma2 I)^{-1} H, evaluated through the
/// K x K push-through form H (H^H H + sigma2 I)^{-1} and normalized to ||W||_F^2 = K.
inline CMat rzf_init(const CMat& h_b, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::domain_error("rzf_init: sigma2 must be positive");
  CMat gram = h_b.adjoint() * h_b;
  gram.diagonal().array() += sigma2;
  return normalize_power(h_b * gram.ldlt().solve(CMat::Identity(h_b.cols(), h_b.cols())));
}

/// Matched filter with unit-norm columns.
inline CMat mrt_beamfocus(const CMat& h_b) {
  CMat w(h_b.rows(), h_b.cols());
  for (Eigen::Index k = 0; k < h_b.cols(); ++k) {
    const double nk = h_b.col(k).norm();
    if (!(nk > 0.0)) throw std::domain_error("mrt_beamfocus: zero channel for LUE " + std::to_string(k));
    w.col(k) = h_b.col(k) / nk;
  }
  return w;
}

/// Far-field channels for the given placements: same LSFC and carrier phase,
/// planar-wave array response.
inline CMat far_field_channels(const ArrayGeometry& geom, const std::vector<UePlacement>& placements) {
  CMat h(geom.n_b(), static_cast<Eigen::Index>(placements.size()));
  for (std::size_t k = 0; k < placements.size(); ++k) {
    const auto& p = placements[k];
    h.col(static_cast<Eigen::Index>(k)) =
        los_channel(geom, path_loss_linear(p.d), p.theta, p.phi, p.d, /*near_field=*/false);
  }
  return h;
}

/// RZF designed on the far-field approximation of the LUE channels.
inline CMat ff_beamform(const ArrayGeometry& geom, const std::vector<UePlacement>& lues, double sigma2) {
  return rzf_init(far_field_channels(geom, lues), sigma2);
}

struct PowerSplit {
  double eps_s = 0.0;  // per-stream data power [W]
  double eps_a = 0.0;  // per-dimension AN power [W]
};

inline void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::domain_error("power allocation factor must lie in (0, 1], got " + std::to_string(epsilon));
}

inline PowerSplit power_split(double epsilon, double p_b, int k_users, int n_b) {
  require_epsilon(epsilon);
  return {epsilon * p_b / k_users, (1.0 - epsilon) * p_b / n_b};
}

/// Radiated power eps_s ||W||_F^2 + eps_a tr(V^H V).
inline double radiated_power(const PrecodingState& st, double p_b) {
  const auto split = power_split(st.epsilon, p_b, static_cast<int>(st.w.cols()), static_cast<int>(st.w.rows()));
  return split.eps_s * st.w.squaredNorm() + split.eps_a * st.v.squaredNorm();
}

}  // namespace nfsec
