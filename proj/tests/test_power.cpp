// SPDX-License-Identifier: Apache-2.0
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace nfsec;
using nfsec::testing::random_channels;
using nfsec::testing::random_cmat;
using nfsec::testing::uniform;

namespace {

PowerCoefficients random_coefficients(std::mt19937_64& rng) {
  PowerCoefficients c;
  c.k_users = 1 + static_cast<int>(rng() % 4);
  c.n_b = 16 + static_cast<int>(rng() % 100);
  c.p_b = dbm_to_watts(uniform(rng, 0.0, 20.0));
  c.sigma2 = dbm_to_watts(-96.0);
  const double beta = path_loss_linear(uniform(rng, 5.0, 40.0)) * c.n_b;
  c.a1 = beta * uniform(rng, 0.1, 1.0);
  c.b1 = beta * uniform(rng, 0.0, 0.05);
  c.a2 = beta * uniform(rng, 0.0, 1.0);
  c.b2 = beta * uniform(rng, 0.0, 0.5);
  c.v = beta * uniform(rng, 0.0, 1.0);
  return c;
}

}  // namespace

TEST(Derivative, NoLeakageClosedForm) {
  PowerCoefficients c;
  c.a1 = 2e-6;
  c.b1 = 3e-7;
  c.a2 = 0.0;
  c.v = 0.0;
  c.k_users = 3;
  c.n_b = 50;
  for (double eps : {0.1, 0.5, 0.9}) {
    const double P = c.p_b, s2 = c.sigma2, K = 3;
    const double expect = K * P * c.a1 * s2 / ((s2 * K + c.b1 * P * eps) * (s2 * K + (c.a1 + c.b1) * P * eps));
    EXPECT_NEAR(secrecy_derivative(eps, c), expect, 1e-12 * expect);
    EXPECT_GT(expect, 0.0);
  }
}

TEST(Derivative, MatchesCentralDifferences) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_coefficients(rng);
    for (int i = 1; i <= 9; ++i) {
      const double eps = 0.1 * i;
      const double h = 1e-7;
      const double fd = (secrecy_gap_of_epsilon(eps + h, c) - secrecy_gap_of_epsilon(eps - h, c)) / (2 * h);
      const double an = secrecy_derivative(eps, c);
      EXPECT_NEAR(an, fd, 1e-4 * std::max(std::abs(fd), 1e-6));
    }
  }
}

TEST(Derivative, CoefficientsFromModelMatchRates) {
  std::mt19937_64 rng(2);
  ChannelSet ch = random_channels(12, 3, 2, rng, 1e-8);
  const CMat w = normalize_power(random_cmat(12, 3, rng));
  const CMat v = null_space_an(ch.lue);
  const LinkBudget lb{1e-3, 1e-12};
  const RateModel m(ch, w, v, lb);
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k < 3; ++k) {
      const auto c = PowerCoefficients::from_model(m, e, k);
      EXPECT_LE(c.v, ch.eue.col(e).squaredNorm() * (1 + 1e-12));
      for (double eps : {0.2, 0.6, 1.0}) EXPECT_NEAR(secrecy_gap_of_epsilon(eps, c), m.gap(e, k, eps), 1e-12);
    }
}

TEST(ApproxRoots, ReferenceValues) {
  PowerCoefficients c;
  c.a2 = 1.0;
  c.k_users = 2;
  c.v = 1.0;
  c.n_b = 100;
  const auto r = approx_roots(c);
  ASSERT_TRUE(r.eps_plus && r.eps_minus);
  EXPECT_NEAR(*r.eps_plus, (-2.0 + std::sqrt(200.0)) / 98.0, 1e-15);
  EXPECT_NEAR(*r.eps_plus, 0.12390, 1e-5);
  EXPECT_NEAR(*r.eps_minus, -0.16472, 1e-5);

  c.v = 0.0;
  EXPECT_EQ(*approx_roots(c).eps_plus, 0.0);

  c.v = 50.0;  // A2 N_b == K V
  EXPECT_TRUE(approx_roots(c).degenerate);
}

TEST(ApproxRoots, StationaryInTheirRegime) {
  // High SNR, no interference: the derivative nearly vanishes at eps_plus.
  PowerCoefficients c;
  c.a1 = 1.0;
  c.b1 = 0.0;
  c.a2 = 1.0;
  c.b2 = 0.0;
  c.v = 1.0;
  c.k_users = 2;
  c.n_b = 100;
  c.p_b = 1.0;
  c.sigma2 = 1e-9;
  const double ep = *approx_roots(c).eps_plus;
  const double at = std::abs(secrecy_derivative(ep, c));
  const double half = std::abs(secrecy_derivative(0.5 * ep, c));
  RecordProperty("derivative_at_eps_plus", std::to_string(at));
  RecordProperty("derivative_at_half", std::to_string(half));
  EXPECT_LT(at, 1e-3 * half);
}

TEST(GoldenSection, KnownMaximum) {
  const auto r = golden_section([](double x) { return -(x - 0.3) * (x - 0.3); }, 1e-3, 1.0, 1e-6);
  EXPECT_NEAR(r.x, 0.3, 1e-6);
  const int bound = static_cast<int>(std::ceil(std::log(1e-6 / (1.0 - 1e-3)) / std::log(kInvGolden))) + 2;
  EXPECT_LE(r.iterations, bound);
}

TEST(GoldenSection, MonotoneEndsAtUpperBound) {
  const auto r = golden_section([](double x) { return x; }, 1e-3, 1.0, 1e-6);
  EXPECT_GT(r.x, 1.0 - 1e-6);
  EXPECT_LE(r.x, 1.0);
  EXPECT_THROW(golden_section([](double x) { return x; }, 1.0, 1.0, 1e-6), std::invalid_argument);
}

TEST(GoldenSection, GridOracleOnMinSecrecy) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    ChannelSet ch = random_channels(10, 2, 2, rng, 1e-8);
    ch.eue *= 2.0;
    const CMat w = normalize_power(random_cmat(10, 2, rng));
    const RateModel m(ch, w, null_space_an(ch.lue), {1e-3, 1e-12});
    const int e = 1, k = 0;
    const auto f = [&](double x) { return m.gap(e, k, x); };
    const auto r = golden_section(f, kEpsilonMin, 1.0, 1e-6);
    double best = -1e300, arg = 0;
    for (int i = 0; i < 10000; ++i) {
      const double x = kEpsilonMin + (1.0 - kEpsilonMin) * i / 9999.0;
      if (f(x) > best) {
        best = f(x);
        arg = x;
      }
    }
    EXPECT_GE(r.value, best - 1e-6);
    EXPECT_NEAR(r.x, arg, std::max(1e-6, 1.0 / 9999.0) + 1e-6);
  }
}

TEST(GoldenSection, BracketsEps) {
  // Synthetic coefficients in the interference-free high-SNR regime.
  PowerCoefficients c;
  c.a1 = 1.0;
  c.a2 = 1.0;
  c.v = 1.0;
  c.k_users = 2;
  c.n_b = 100;
  c.p_b = 1.0;
  c.sigma2 = 1e-9;
  const auto r = golden_section([&](double x) { return secrecy_gap_of_epsilon(x, c); }, kEpsilonMin, 1.0, 1e-6);
  EXPECT_NEAR(r.x, 0.12390, 1e-4);
  EXPECT_GT(secrecy_derivative(r.x - 1e-3, c), 0.0);
  EXPECT_LT(secrecy_derivative(r.x + 1e-3, c), 0.0);
}

TEST(OptimizeEpsilon, InteriorOptimumWithLeakage) {
  // Eavesdropper with a strong channel partly outside the LUE span.
  std::mt19937_64 rng(4);
  ChannelSet ch = random_channels(16, 1, 1, rng, 1e-8);
  ch.eue.col(0) = 0.6 * ch.lue.col(0) + 3.0 * ch.eue.col(0);
  const CMat w = mrt_beamfocus(ch.lue);
  const RateModel m(ch, w, null_space_an(ch.lue), {1e-3, 1e-12});
  const auto up = optimize_epsilon(m, CsiMode::perfect_eue, 1.0);
  EXPECT_GT(up.epsilon, kEpsilonMin);
  EXPECT_LT(up.epsilon, 1.0 - 1e-3);
  const auto c = PowerCoefficients::from_model(m, 0, 0);
  EXPECT_GT(secrecy_derivative(up.epsilon - 1e-3, c), 0.0);
  EXPECT_LT(secrecy_derivative(up.epsilon + 1e-3, c), 0.0);
}

TEST(OptimizeEpsilon, UnknownCsiGoesToFullData) {
  std::mt19937_64 rng(5);
  ChannelSet ch = random_channels(16, 3, 2, rng, 1e-8);
  const RateModel m(ch, rzf_init(ch.lue, 1e-6), null_space_an(ch.lue), {1e-3, 1e-12});
  const auto up = optimize_epsilon(m, CsiMode::unknown_eue, 0.4);
  EXPECT_GT(up.epsilon, 1.0 - 1e-5);
  EXPECT_LE(up.epsilon, 1.0);
}

TEST(OptimizeEpsilon, OverridePassesThrough) {
  std::mt19937_64 rng(6);
  ChannelSet ch = random_channels(8, 2, 2, rng, 1e-8);
  const RateModel m(ch, rzf_init(ch.lue, 1e-6), null_space_an(ch.lue), {1e-3, 1e-12});
  EXPECT_EQ(optimize_epsilon(m, CsiMode::perfect_eue, 0.3, 1e-6, 0.37).epsilon, 0.37);
  EXPECT_THROW(optimize_epsilon(m, CsiMode::perfect_eue, 0.3, 1e-6, 0.0), std::domain_error);
}

TEST(OptimizeEpsilon, AlwaysInRange) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    ChannelSet ch = random_channels(10, 2, 3, rng, 1e-8);
    const RateModel m(ch, normalize_power(random_cmat(10, 2, rng)), null_space_an(ch.lue), {1e-3, 1e-12});
    for (auto mode : {CsiMode::perfect_eue, CsiMode::unknown_eue}) {
      const auto up = optimize_epsilon(m, mode, uniform(rng, 0.01, 1.0));
      EXPECT_GE(up.epsilon, kEpsilonMin);
      EXPECT_LE(up.epsilon, 1.0);
    }
  }
}
