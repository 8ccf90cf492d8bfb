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

#include "nfsec/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace nfsec {

// ------------------------------------------------------------------------
// Subproblem solvers
// ------------------------------------------------------------------------

enum class SubproblemMethod {
  interior_point,      // exact max-min in the span of the user channels
  projected_gradient,  // log-sum-exp smoothing + projected spectral gradient
};

struct SolverOptions {
  SubproblemMethod method = SubproblemMethod::interior_point;
  // projected gradient
  std::vector<double> tau_schedule{1.0, 1e-1, 1e-2, 1e-3};
  int max_inner = 2000;  // over all temperature stages
  double pg_tol = 1e-6;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  // interior point
  double gap_tol = 1e-9;       // (pairs + 1) / t at the last barrier stage
  double barrier_growth = 20.0;
  int max_newton = 600;        // over all barrier stages
  double tol_feas = 1e-6;
};

struct SubproblemSolution {
  CMat w_next;
  double xi = 0.0;  // min over pairs of the surrogate at w_next
  double feasibility_violation = 0.0;
  int inner_iterations = 0;
  bool converged = false;  // false: iteration cap hit, best iterate returned
};

inline double frobenius_inner(const CMat& a, const CMat& b) {
  return (a.conjugate().array() * b.array()).sum().real();
}

inline CMat project_ball(CMat w, double radius) {
  const double n = w.norm();
  if (n > radius) w *= radius / n;
  return w;
}

namespace detail {

inline SubproblemSolution solve_projected_gradient(SurrogateObjective& obj, const CMat& w_t, double budget,
                                                   const SolverOptions& opts) {
  const double radius = std::sqrt(budget);
  CMat w = project_ball(w_t, radius);
  SubproblemSolution best;
  best.w_next = w;
  best.xi = obj.min_value(w);

  int iterations = 0;
  bool stationary = false;
  const int per_stage = std::max(1, opts.max_inner / static_cast<int>(opts.tau_schedule.size()));

  for (double tau : opts.tau_schedule) {
    CMat g;
    double f = obj.soft_min(w, tau, &g);
    double step = 0.1 * std::max(1.0, w.norm()) / std::max(g.norm(), 1e-300);
    stationary = false;
    for (int it = 0; it < per_stage && iterations < opts.max_inner; ++it) {
      if ((project_ball(w + g, radius) - w).norm() < opts.pg_tol) {
        stationary = true;
        break;
      }
      CMat w_new;
      double f_new = 0.0;
      bool accepted = false;
      for (int tries = 0; tries < 60; ++tries) {
        w_new = project_ball(w + step * g, radius);
        f_new = obj.soft_min(w_new, tau, nullptr);
        if (f_new >= f + opts.armijo_c * frobenius_inner(g, w_new - w)) {
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      ++iterations;
      if (!accepted) {
        stationary = true;  // no ascent left at machine precision
        break;
      }
      CMat g_new;
      f_new = obj.soft_min(w_new, tau, &g_new);
      const CMat s = w_new - w;
      const double curvature = -frobenius_inner(s, g_new - g);
      step = curvature > 0.0 ? s.squaredNorm() / curvature : 2.0 * step;
      step = std::clamp(step, 1e-14, 1e14);
      w = std::move(w_new);
      g = std::move(g_new);
      f = f_new;
      const double hard = obj.min_value(w);
      if (hard > best.xi) {
        best.xi = hard;
        best.w_next = w;
      }
    }
  }
  best.inner_iterations = iterations;
  best.converged = stationary;
  return best;
}

}  // namespace detail

/// The surrogates depend on W only through H_all^H W, so any component of W
/// outside span(H_all) costs power without changing them. Writing W = B Z with
/// B an orthonormal basis of that span turns the subproblem into
///   max xi  s.t.  c_i + Re<L_i, Z> - sum_j z_j^H P_ij z_j >= xi,  ||Z||_F^2 <= K
/// in r * K complex unknowns (r <= K + E), stored here as a real vector with
/// column j at [2 r j, 2 r (j + 1)) laid out as (Re z_j, Im z_j).
class ReducedSurrogate {
 public:
  ReducedSurrogate(const SurrogateObjective& obj) : k_users_(obj.k_users()) {
    const CMat& h = obj.h_all();
    Eigen::JacobiSVD<CMat> svd(h, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    rank_ = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-12 * sv(0)) ++rank_;
    basis_ = svd.matrixU().leftCols(rank_);
    const CMat m = h.adjoint() * basis_;  // row u: h_u^H B
    const int r = rank_;
    const int kk = k_users_;
    auto outer = [&](Eigen::Index u) -> CMat { return m.row(u).adjoint() * m.row(u); };

    const auto& lower = obj.lower_terms();
    const auto& upper = obj.upper_terms();
    const int pairs = obj.pair_count();
    for (int i = 0; i < pairs; ++i) {
      const int k = i % kk;
      const int e = obj.e_users() > 0 ? i / kk : -1;
      const auto& lt = lower[k];
      double c = lt.constant;
      CMat lin = CMat::Zero(r, kk);
      std::vector<CMat> quad(kk, CMat::Zero(r, r));
      lin.col(k) += lt.alpha * lt.c_t * m.row(k).adjoint();
      const CMat mk = outer(k);
      for (int j = 0; j < kk; ++j) quad[j] += lt.gamma * mk;
      if (e >= 0) {
        const auto& ut = upper[e * kk + k];
        const Eigen::Index row = kk + e;
        const CMat me = outer(row);
        c -= ut.constant;
        for (int j = 0; j < kk; ++j) {
          quad[j] += ut.mu * me;
          if (j == k) continue;
          lin.col(j) += ut.two_over_s * ut.y_t(j) * m.row(row).adjoint();
          quad[j] += ut.nu * me;
        }
      }
      Pair p;
      p.constant = c;
      p.lin = to_real(lin);
      for (int j = 0; j < kk; ++j) {
        Eigen::MatrixXd blk(2 * r, 2 * r);
        blk << quad[j].real(), -quad[j].imag(), quad[j].imag(), quad[j].real();
        p.quad.push_back(0.5 * (blk + blk.transpose()));
      }
      pairs_.push_back(std::move(p));
    }
  }

  int rank() const { return rank_; }
  int dim() const { return 2 * rank_ * k_users_; }
  int pair_count() const { return static_cast<int>(pairs_.size()); }
  const CMat& basis() const { return basis_; }

  Eigen::VectorXd to_real(const CMat& z) const {
    Eigen::VectorXd v(dim());
    for (int j = 0; j < k_users_; ++j) {
      v.segment(2 * rank_ * j, rank_) = z.col(j).real();
      v.segment(2 * rank_ * j + rank_, rank_) = z.col(j).imag();
    }
    return v;
  }

  CMat to_complex(const Eigen::VectorXd& v) const {
    CMat z(rank_, k_users_);
    for (int j = 0; j < k_users_; ++j)
      for (int a = 0; a < rank_; ++a) z(a, j) = cd(v(2 * rank_ * j + a), v(2 * rank_ * j + rank_ + a));
    return z;
  }

  /// Coordinates of W in the basis (components outside the span are dropped).
  Eigen::VectorXd reduce(const CMat& w) const { return to_real(basis_.adjoint() * w); }
  CMat expand(const Eigen::VectorXd& z) const { return basis_ * to_complex(z); }

  double value(int i, const Eigen::VectorXd& z) const {
    const auto& p = pairs_[i];
    double q = 0.0;
    const int blk = 2 * rank_;
    for (int j = 0; j < k_users_; ++j) {
      const auto zj = z.segment(blk * j, blk);
      q += zj.dot(p.quad[j] * zj);
    }
    return p.constant + p.lin.dot(z) - q;
  }

  Eigen::VectorXd gradient(int i, const Eigen::VectorXd& z) const {
    const auto& p = pairs_[i];
    Eigen::VectorXd g = p.lin;
    const int blk = 2 * rank_;
    for (int j = 0; j < k_users_; ++j) g.segment(blk * j, blk) -= 2.0 * p.quad[j] * z.segment(blk * j, blk);
    return g;
  }

  double min_value(const Eigen::VectorXd& z) const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pair_count(); ++i) best = std::min(best, value(i, z));
    return best;
  }

  /// Adds sum_i weight_i * (Hessian of pair i) into the z-block of `h`.
  void add_hessians(const Eigen::VectorXd& weight, Eigen::MatrixXd& h) const {
    const int blk = 2 * rank_;
    for (int i = 0; i < pair_count(); ++i)
      for (int j = 0; j < k_users_; ++j) h.block(blk * j, blk * j, blk, blk) -= 2.0 * weight(i) * pairs_[i].quad[j];
  }

 private:
  struct Pair {
    double constant = 0.0;
    Eigen::VectorXd lin;
    std::vector<Eigen::MatrixXd> quad;  // per column, real symmetric PSD
  };

  int k_users_;
  int rank_ = 0;
  CMat basis_;
  std::vector<Pair> pairs_;
};

namespace detail {

/// Log-barrier method on the reduced epigraph problem, Newton centering.
inline SubproblemSolution solve_interior_point(const SurrogateObjective& obj, const CMat& w_t, double budget,
                                               const SolverOptions& opts) {
  const ReducedSurrogate red(obj);
  const int n = red.dim();
  const int m = red.pair_count();

  SubproblemSolution out;
  // Reference: the expansion point itself (surrogates are tight there).
  out.w_next = w_t;
  {
    SurrogateObjective& mut = const_cast<SurrogateObjective&>(obj);
    out.xi = mut.min_value(w_t);
  }
  if (n == 0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd z = red.reduce(w_t);
  const double shrink = budget * (1.0 - 1e-6);
  if (z.squaredNorm() > shrink) z *= std::sqrt(shrink) / z.norm();
  double xi = red.min_value(z);
  xi -= std::max(1.0, std::abs(xi));

  Eigen::VectorXd c(m);
  Eigen::VectorXd weight(m);
  std::vector<Eigen::VectorXd> grads(m);

  auto barrier = [&](const Eigen::VectorXd& zz, double xx, double t) {
    double f = t * xx;
    for (int i = 0; i < m; ++i) {
      const double ci = red.value(i, zz) - xx;
      if (!(ci > 0.0)) return -std::numeric_limits<double>::infinity();
      f += std::log(ci);
    }
    const double c0 = budget - zz.squaredNorm();
    if (!(c0 > 0.0)) return -std::numeric_limits<double>::infinity();
    return f + std::log(c0);
  };

  double t = 1.0;
  int newton = 0;
  bool converged = true;
  bool stalled = false;
  while (true) {
    bool centered = false;
    while (newton < opts.max_newton) {
      for (int i = 0; i < m; ++i) {
        c(i) = red.value(i, z) - xi;
        grads[i] = red.gradient(i, z);
      }
      const double c0 = budget - z.squaredNorm();
      Eigen::VectorXd grad(n + 1);
      grad.setZero();
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n + 1, n + 1);
      grad(n) = t;
      for (int i = 0; i < m; ++i) {
        grad.head(n) += grads[i] / c(i);
        grad(n) -= 1.0 / c(i);
        weight(i) = 1.0 / c(i);
        const double w2 = 1.0 / (c(i) * c(i));
        hess.topLeftCorner(n, n).noalias() -= w2 * grads[i] * grads[i].transpose();
        hess.block(0, n, n, 1) += w2 * grads[i];
        hess(n, n) -= w2;
      }
      hess.block(n, 0, 1, n) = hess.block(0, n, n, 1).transpose();
      red.add_hessians(weight, hess);
      grad.head(n) -= 2.0 * z / c0;
      hess.topLeftCorner(n, n).diagonal().array() -= 2.0 / c0;
      hess.topLeftCorner(n, n).noalias() -= (4.0 / (c0 * c0)) * z * z.transpose();

      const Eigen::MatrixXd neg = -hess;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(neg);
      Eigen::VectorXd step = ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        converged = false;
        break;
      }
      const double decrement = grad.dot(step);
      ++newton;
      // lambda^2 / 2 bounds the centering error of the barrier function.
      if (!(decrement > 1e-10)) {
        centered = true;
        break;
      }
      const double f0 = barrier(z, xi, t);
      double s = 1.0;
      bool moved = false;
      for (int tries = 0; tries < 50; ++tries) {
        const Eigen::VectorXd zn = z + s * step.head(n);
        const double xn = xi + s * step(n);
        const double fn = barrier(zn, xn, t);
        if (std::isfinite(fn) && fn >= f0 + 0.01 * s * decrement) {
          z = zn;
          xi = xn;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved || s * step.norm() <= 1e-13 * (1.0 + z.norm() + std::abs(xi))) {
        centered = stalled = true;  // rounding level; a larger t cannot help
        break;
      }
    }
    if (!centered) {
      converged = false;
      break;
    }
    if (stalled || (m + 1) / t < opts.gap_tol) break;
    t *= opts.barrier_growth;
  }

  const double hard = red.min_value(z);
  if (hard > out.xi) {
    out.xi = hard;
    out.w_next = red.expand(z);
  }
  out.inner_iterations = newton;
  out.converged = converged;
  return out;
}

}  // namespace detail

/// Maximizes min_{k,e} g_{k,e}(W) over ||W||_F^2 <= budget around the expansion
/// point. The expansion point is kept when nothing better is found, so xi is
/// never below its value at W^(t).
inline SubproblemSolution solve_subproblem(const SurrogatePoint& pt, const ChannelSet& ch, CsiMode mode,
                                           double budget, const SolverOptions& opts = {}) {
  SurrogateObjective obj(pt, ch, mode);
  SubproblemSolution sol = opts.method == SubproblemMethod::interior_point
                               ? detail::solve_interior_point(obj, pt.w_t, budget, opts)
                               : detail::solve_projected_gradient(obj, pt.w_t, budget, opts);
  sol.feasibility_violation = std::max(0.0, sol.w_next.squaredNorm() - budget);
  return sol;
}

struct ScaRound {
  CMat w;
  double xi = 0.0;
  bool solver_warning = false;
  int inner_iterations = 0;
};

/// One surrogate build at the current W plus one subproblem solve, with the
/// effective noises frozen at the current epsilon.
inline ScaRound sca_round(const PrecodingState& st, const ChannelSet& ch, const LinkBudget& lb, CsiMode mode,
                          const SolverOptions& opts = {}) {
  SurrogatePoint pt(ch, st.w, effective_noises(ch, st.v, st.epsilon, lb));
  auto sol = solve_subproblem(pt, ch, mode, static_cast<double>(st.w.cols()), opts);
  return {std::move(sol.w_next), sol.xi, !sol.converged, sol.inner_iterations};
}

}  // namespace nfsec
