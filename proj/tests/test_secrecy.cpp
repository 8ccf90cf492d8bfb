// SPDX-License-Identifier: Apache-2.0
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace nfsec;
using nfsec::testing::random_channels;
using nfsec::testing::random_cmat;
using nfsec::testing::uniform;

namespace {

struct Instance {
  ChannelSet ch;
  PrecodingState st;
  LinkBudget lb;
};

Instance random_instance(int n_b, int k, int e, std::mt19937_64& rng) {
  Instance in;
  in.ch = random_channels(n_b, k, e, rng, 1e-8);
  in.st.w = normalize_power(random_cmat(n_b, k, rng));
  in.st.v = null_space_an(in.ch.lue);
  in.st.epsilon = uniform(rng, 0.05, 1.0);
  in.lb = {1e-3, 1e-12};
  return in;
}

// SINR from scratch with per-stream powers and per-column AN sums.
double scratch_rate(const CVec& h, bool eue, int k, const Instance& in) {
  const int kk = static_cast<int>(in.st.w.cols());
  const int n = static_cast<int>(in.st.w.rows());
  const double es = in.st.epsilon * in.lb.p_b / kk;
  const double ea = (1.0 - in.st.epsilon) * in.lb.p_b / n;
  double sig = 0, intf = 0, an = 0;
  for (int j = 0; j < kk; ++j) {
    cd acc = 0;
    for (int i = 0; i < n; ++i) acc += std::conj(h(i)) * in.st.w(i, j);
    (j == k ? sig : intf) += es * std::norm(acc);
  }
  if (eue)
    for (int c = 0; c < n; ++c) {
      cd acc = 0;
      for (int i = 0; i < n; ++i) acc += std::conj(h(i)) * in.st.v(i, c);
      an += ea * std::norm(acc);
    }
  return std::log(1.0 + sig / (intf + an + in.lb.sigma2));
}

}  // namespace

TEST(EffectiveNoise, Cases) {
  std::mt19937_64 rng(1);
  const CMat v = random_cmat(6, 6, rng);
  const CVec h = random_cmat(6, 1, rng).col(0);
  EXPECT_EQ(effective_noise(false, h, v, 0.2, 0.1, 3.0), 3.0 / 0.2);
  EXPECT_EQ(effective_noise(true, h, v, 0.2, 0.0, 3.0), 3.0 / 0.2);
  const double expect = (0.1 * (v.adjoint() * h).squaredNorm() + 3.0) / 0.2;
  EXPECT_NEAR(effective_noise(true, h, v, 0.2, 0.1, 3.0) / expect, 1.0, 1e-14);
  EXPECT_THROW(effective_noise(true, h, v, 0.0, 0.1, 3.0), std::domain_error);
}

TEST(Rate, ZeroBeamGivesZero) {
  std::mt19937_64 rng(2);
  auto in = random_instance(8, 2, 2, rng);
  in.st.w.col(1).setZero();
  EXPECT_EQ(rate(UeId::lue(1), 1, in.ch, in.st, in.lb), 0.0);
  EXPECT_EQ(rate(UeId::eue(0), 1, in.ch, in.st, in.lb), 0.0);
}

TEST(Rate, SingleUserReduction) {
  std::mt19937_64 rng(3);
  auto in = random_instance(8, 1, 1, rng);
  in.st.epsilon = 1.0;
  const double es = in.lb.p_b;
  const double expect = std::log1p(es * std::norm(in.ch.lue.col(0).dot(in.st.w.col(0))) / in.lb.sigma2);
  EXPECT_NEAR(rate(UeId::lue(0), 0, in.ch, in.st, in.lb), expect, 1e-12);
}

TEST(Rate, ThreeWayAgreement) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    auto in = random_instance(10, 3, 2, rng);
    for (int k = 0; k < 3; ++k) {
      const double a = rate(UeId::lue(k), k, in.ch, in.st, in.lb);
      EXPECT_NEAR(a, rate_power_form(UeId::lue(k), k, in.ch, in.st, in.lb), 1e-10 * (1 + a));
      EXPECT_NEAR(a, scratch_rate(in.ch.lue.col(k), false, k, in), 1e-10 * (1 + a));
      for (int e = 0; e < 2; ++e) {
        const double b = rate(UeId::eue(e), k, in.ch, in.st, in.lb);
        EXPECT_NEAR(b, rate_power_form(UeId::eue(e), k, in.ch, in.st, in.lb), 1e-10 * (1 + b));
        EXPECT_NEAR(b, scratch_rate(in.ch.eue.col(e), true, k, in), 1e-10 * (1 + b));
      }
    }
  }
}

TEST(Rate, BreakdownRecomputes) {
  std::mt19937_64 rng(5);
  auto in = random_instance(10, 3, 2, rng);
  const auto r = rate_breakdown(UeId::eue(1), 2, in.ch, in.st, in.lb);
  EXPECT_GE(r.signal_power, 0.0);
  EXPECT_GE(r.interference, 0.0);
  EXPECT_GE(r.an_power, 0.0);
  EXPECT_NEAR(r.rate_nats, std::log1p(r.sinr()), 1e-14);
  EXPECT_THROW(rate(UeId::lue(3), 0, in.ch, in.st, in.lb), std::out_of_range);
}

TEST(Secrecy, DegenerateEavesdroppers) {
  std::mt19937_64 rng(6);
  auto in = random_instance(8, 2, 2, rng);
  in.ch.eue.col(0) = in.ch.lue.col(0);
  in.st.epsilon = 1.0;
  EXPECT_EQ(secrecy_rate(0, 0, in.ch, in.st, in.lb), 0.0);
  in.ch.eue.col(1).setZero();
  EXPECT_EQ(secrecy_rate(1, 1, in.ch, in.st, in.lb), rate(UeId::lue(1), 1, in.ch, in.st, in.lb));
}

TEST(Secrecy, ClampWhenEavesdropperIsCloser) {
  ScenarioConfig cfg;
  auto [sc, ch] = generate_scenario(cfg, 5);
  PrecodingState st{ff_beamform(sc.geometry, sc.lues, sc.sigma2), null_space_an(ch.lue), 1.0};
  const LinkBudget lb{sc.p_b, sc.sigma2};
  int clamped = 0;
  for (int e = 0; e < 4; ++e)
    for (int k = 0; k < 4; ++k) {
      const double gap = secrecy_gap(e, k, ch, st, lb);
      const double s = secrecy_rate(e, k, ch, st, lb);
      EXPECT_GE(s, 0.0);
      if (gap < 0) {
        EXPECT_EQ(s, 0.0);
        ++clamped;
      } else {
        EXPECT_EQ(s, gap);
      }
    }
  EXPECT_GT(clamped, 0);
}

TEST(MinSecrecy, TieBreakAndZeroBeam) {
  std::mt19937_64 rng(7);
  auto in = random_instance(6, 2, 3, rng);
  in.st.w.setZero();
  const auto m = min_secrecy_rate(in.ch, in.st, in.lb);
  EXPECT_EQ(m.value, 0.0);
  EXPECT_EQ(m.e, 0);
  EXPECT_EQ(m.k, 0);

  auto one = random_instance(6, 1, 1, rng);
  EXPECT_EQ(min_secrecy_rate(one.ch, one.st, one.lb).value, secrecy_rate(0, 0, one.ch, one.st, one.lb));
}

TEST(MinSecrecy, ExhaustiveScan) {
  std::mt19937_64 rng(8);
  for (int k = 1; k <= 4; ++k)
    for (int e = 1; e <= 4; ++e) {
      auto in = random_instance(12, k, e, rng);
      double best = std::numeric_limits<double>::infinity();
      int be = -1, bk = -1;
      for (int ee = 0; ee < e; ++ee)
        for (int kk = 0; kk < k; ++kk) {
          const double s = secrecy_rate(ee, kk, in.ch, in.st, in.lb);
          if (s < best) {
            best = s;
            be = ee;
            bk = kk;
          }
        }
      const auto m = min_secrecy_rate(in.ch, in.st, in.lb);
      EXPECT_NEAR(m.value, best, 1e-12);
      EXPECT_EQ(m.e, be);
      EXPECT_EQ(m.k, bk);
    }
}

TEST(RateProperties, LueRateIgnoresAn) {
  std::mt19937_64 rng(9);
  auto in = random_instance(10, 3, 2, rng);
  const auto base = rate_breakdown(UeId::lue(1), 1, in.ch, in.st, in.lb);
  // Any matrix in the null space of H_b^H leaves LUE noise bit-identical.
  PrecodingState other = in.st;
  other.v = in.st.v * random_cmat(10, 10, rng) * in.st.v;
  const auto pert = rate_breakdown(UeId::lue(1), 1, in.ch, other, in.lb);
  EXPECT_EQ(base.sigma_eps2, pert.sigma_eps2);
  EXPECT_EQ(base.rate_nats, pert.rate_nats);
}

TEST(RateProperties, MonotoneInNoiseAndEpsilon) {
  std::mt19937_64 rng(10);
  auto in = random_instance(10, 3, 2, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double s2 : {1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
    LinkBudget lb{in.lb.p_b, s2};
    const double r = rate(UeId::lue(0), 0, in.ch, in.st, lb);
    EXPECT_LT(r, prev);
    prev = r;
  }
  const RateModel m(in.ch, in.st.w, in.st.v, in.lb);
  double prev_l = -1, prev_e = -1;
  for (int i = 1; i <= 20; ++i) {
    const double eps = i / 20.0;
    const double rl = m.lue_rate(2, eps);
    const double re = m.eue_rate(1, 2, eps);
    EXPECT_GT(rl, prev_l);
    EXPECT_GE(re, prev_e);
    prev_l = rl;
    prev_e = re;
  }
}

TEST(RateModel, AgreesWithDirectEvaluation) {
  std::mt19937_64 rng(11);
  auto in = random_instance(10, 3, 3, rng);
  const RateModel m(in.ch, in.st.w, in.st.v, in.lb);
  for (int e = 0; e < 3; ++e)
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(m.gap(e, k, in.st.epsilon), secrecy_gap(e, k, in.ch, in.st, in.lb), 1e-12);
  EXPECT_NEAR(m.min_secrecy(in.st.epsilon).value, min_secrecy_rate(in.ch, in.st, in.lb).value, 1e-12);
}
