// SPDX-License-Identifier: Apache-2.0
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace nfsec;
using nfsec::testing::uniform;

namespace {

// Independent evaluation of the spherical-wave phase, written out term by term.
cd oracle_element(double theta, double phi, double d, int nx, int nz, double lambda) {
  const double k0 = 2.0 * kPi / lambda;
  const double ds = lambda / 2.0;
  const double cx = std::cos(theta) * std::sin(phi);
  const double px = nx * ds * cx + nx * nx * ds * ds * (1.0 - cx * cx) / (2.0 * d);
  const double pz = nz * ds * std::cos(phi) + nz * nz * ds * ds * std::sin(phi) * std::sin(phi) / (2.0 * d);
  return std::exp(cd(0.0, -k0 * px)) * std::exp(cd(0.0, -k0 * pz));
}

}  // namespace

TEST(ArrayGeometry, RejectsEvenOrEmptyAxes) {
  EXPECT_THROW(ArrayGeometry(4, 3, 0.15), std::invalid_argument);
  EXPECT_THROW(ArrayGeometry(3, 0, 0.15), std::invalid_argument);
  EXPECT_THROW(ArrayGeometry(3, 3, -1.0), std::invalid_argument);
  const ArrayGeometry g(5, 3, 0.15);
  EXPECT_EQ(g.n_b(), 15);
  EXPECT_EQ(g.nbar_x(), 2);
  EXPECT_EQ(g.nbar_z(), 1);
  EXPECT_EQ(g.spacing(), 0.075);
}

TEST(ArrayGeometry, CarrierSetsWavelength) {
  const auto g = ArrayGeometry::from_carrier(3, 3, 2e9);
  EXPECT_NEAR(g.wavelength(), 0.149896229, 1e-9);
}

TEST(Steering, CentreElementIsOne) {
  EXPECT_EQ(steering_phase_x(1.1, 0.7, 3.0, 0, 0.15), cd(1.0, 0.0));
  EXPECT_EQ(steering_phase_z(0.7, 3.0, 0, 0.15), cd(1.0, 0.0));
}

TEST(Steering, BroadsideQuadraticPhase) {
  const cd px = steering_phase_x(kPi / 2, kPi / 2, 5.0, 1, 0.15);
  EXPECT_NEAR(std::abs(px), 1.0, 1e-15);
  const double expected = 2.0 * kPi / 0.15 * (0.15 * 0.15 / (8.0 * 5.0));
  EXPECT_NEAR(std::arg(px), -expected, 1e-12);

  const cd pz = steering_phase_z(kPi / 2, 5.0, 1, 0.15);
  EXPECT_NEAR(std::arg(pz), -0.023562, 1e-6);
  EXPECT_NEAR(std::abs(pz - std::exp(cd(0.0, -0.0235619449))), 0.0, 1e-9);
}

TEST(Steering, EndfireIsPureLinearPhase) {
  const cd pz = steering_phase_z(0.0, 5.0, 1, 0.15);
  EXPECT_NEAR(std::abs(pz - cd(-1.0, 0.0)), 0.0, 1e-12);
}

TEST(Steering, FarFieldLimit) {
  const double lambda = 0.15, theta = 0.4, phi = 1.2;
  const cd near = steering_phase_x(theta, phi, 1e9, 2, lambda);
  const double planar = -(2.0 * kPi / lambda) * 2.0 * (lambda / 2.0) * std::cos(theta) * std::sin(phi);
  EXPECT_LT(std::abs(std::arg(near * std::exp(cd(0.0, -planar)))), 1e-6);
}

TEST(ArrayResponse, TrivialArrays) {
  const ArrayGeometry one(1, 1, 0.15);
  const CVec a = array_response(one, 0.3, 1.0, 7.0);
  ASSERT_EQ(a.size(), 1);
  EXPECT_EQ(a(0), cd(1.0, 0.0));

  const ArrayGeometry g(3, 3, 0.15);
  const CVec b = array_response(g, 0.3, 1.0, 7.0);
  EXPECT_NEAR(std::abs(b(1 * 3 + 1) - cd(1.0, 0.0)), 0.0, 1e-15);
}

TEST(ArrayResponse, MatchesElementwiseOracle) {
  std::mt19937_64 rng(7);
  for (int nx = 1; nx <= 5; nx += 2)
    for (int nz = 1; nz <= 5; nz += 2)
      for (int trial = 0; trial < 20; ++trial) {
        const double lambda = uniform(rng, 0.05, 0.3);
        const ArrayGeometry g(nx, nz, lambda);
        const double theta = uniform(rng, 0.0, 2.0 * kPi);
        const double phi = uniform(rng, 0.05, kPi - 0.05);
        const double d = uniform(rng, 0.5, 80.0);
        const CVec a = array_response(g, theta, phi, d);
        for (int i = 0; i < nx; ++i)
          for (int j = 0; j < nz; ++j) {
            const cd expect = oracle_element(theta, phi, d, i - g.nbar_x(), j - g.nbar_z(), lambda);
            EXPECT_NEAR(std::abs(a(i * nz + j) - expect), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(a(i * nz + j)), 1.0, 1e-12);
          }
      }
}

TEST(ArrayResponse, ConvergesToPlanarWave) {
  const ArrayGeometry g(9, 5, 0.15);
  const CVec far = array_response(g, 4.0, 1.3, 1.0, false);
  double prev = std::numeric_limits<double>::infinity();
  for (double d : {10.0, 100.0, 1e3, 1e5, 1e8}) {
    const double err = (array_response(g, 4.0, 1.3, d) - far).cwiseAbs().maxCoeff();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(PathLoss, ClosedForm) {
  EXPECT_NEAR(path_loss_db(1.0), -33.05, 1e-12);
  EXPECT_NEAR(path_loss_db(10.0), -69.75, 1e-12);
  EXPECT_NEAR(path_loss_db(100.0), -106.45, 1e-12);
  EXPECT_THROW(path_loss_db(0.0), std::domain_error);
}

TEST(LosChannel, MagnitudeAndPhase) {
  const ArrayGeometry one(1, 1, 0.15);
  EXPECT_NEAR(std::abs(los_channel(one, 1.0, 0.2, 1.0, 3.0)(0)), 1.0, 1e-15);

  const ArrayGeometry g(5, 3, 0.15);
  const CVec h = los_channel(g, 4.0, 3.9, kPi / 2, 17.0);
  EXPECT_NEAR(h.norm(), 2.0 * std::sqrt(15.0), 1e-12);

  // Row form h^H = sqrt(beta) e^{-j 2 pi d / lambda} a^T, element by element.
  const double beta = path_loss_linear(17.0);
  const CVec hb = los_channel(g, beta, 3.9, kPi / 2, 17.0);
  EXPECT_NEAR(hb.squaredNorm() / (beta * 15.0), 1.0, 1e-9);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) {
      const cd row = std::sqrt(beta) * std::exp(cd(0.0, -2.0 * kPi * 17.0 / 0.15)) *
                     oracle_element(3.9, kPi / 2, 17.0, i - 2, j - 1, 0.15);
      EXPECT_NEAR(std::abs(std::conj(hb(i * 3 + j)) - row), 0.0, 1e-12 * std::sqrt(beta));
    }
}

TEST(NlosChannel, DegenerateAndSeeded) {
  const ArrayGeometry g(5, 1, 0.15);
  std::mt19937_64 rng(1);
  EXPECT_EQ(nlos_channel(g, {}, {}, rng).norm(), 0.0);

  const UePlacement s{4.0, kPi / 2, 12.0, UeRole::lue, 0};
  const CVec one = nlos_channel(g, {s}, {cd(1.0, 0.0)}, rng);
  EXPECT_NEAR((one - array_response(g, s.theta, s.phi, s.d).conjugate()).norm(), 0.0, 1e-14);

  std::vector<UePlacement> three{s, {4.2, kPi / 2, 20.0, UeRole::lue, 1}, {3.6, kPi / 2, 30.0, UeRole::lue, 2}};
  std::mt19937_64 a(99), b(99);
  EXPECT_EQ(nlos_channel(g, three, {}, a), nlos_channel(g, three, {}, b));
}

TEST(Rayleigh, ClosedForms) {
  EXPECT_EQ(rayleigh_distance(ArrayGeometry(1, 1, 0.15)), 0.0);
  EXPECT_NEAR(rayleigh_distance(ArrayGeometry(3, 3, 0.15)), 0.6, 1e-12);
  EXPECT_NEAR(rayleigh_distance(ArrayGeometry(7, 5, 0.3)) / rayleigh_distance(ArrayGeometry(7, 5, 0.15)), 2.0, 1e-12);
}

TEST(Units, ConversionsAgainstClosedForms) {
  EXPECT_NEAR(dbm_to_watts(-96.0) / 2.51188643150958e-13, 1.0, 1e-12);
  EXPECT_NEAR(dbm_to_watts(0.0), 1e-3, 1e-18);
  EXPECT_NEAR(dbm_to_watts(20.0), 0.1, 1e-15);
  for (double dbm : {-96.0, -30.0, 0.0, 13.0, 20.0}) EXPECT_NEAR(watts_to_dbm(dbm_to_watts(dbm)), dbm, 1e-11);
  EXPECT_NEAR(nats_to_bits(std::log(2.0)), 1.0, 1e-15);
  EXPECT_NEAR(nats_to_bits(1.0), 1.44269504088896, 1e-12);
}

TEST(Placement, CellRoundTrip) {
  const Point2 bs{50.0, 100.0};
  const Point2 ue{30.0, 80.0};
  const auto p = placement_from_cell(ue, bs);
  EXPECT_NEAR(p.d, std::hypot(20.0, 20.0), 1e-12);
  EXPECT_NEAR(p.theta, 5.0 * kPi / 4.0, 1e-12);
  EXPECT_NEAR(p.phi, kPi / 2, 0.0);
  const auto q = cell_position(p, bs);
  EXPECT_NEAR(q.x, ue.x, 1e-12);
  EXPECT_NEAR(q.y, ue.y, 1e-12);
}

TEST(Scenario, CollinearPair) {
  ScenarioConfig cfg;
  cfg.n_x = 9;
  cfg.n_z = 1;
  cfg.k_users = cfg.e_users = 1;
  cfg.lue_distance_min = cfg.lue_distance_max = 20.0;
  auto [sc, ch] = generate_scenario(cfg, 3);
  EXPECT_EQ(sc.lues[0].theta, sc.eues[0].theta);
  EXPECT_EQ(sc.lues[0].phi, sc.eues[0].phi);
  EXPECT_NEAR(sc.eues[0].d, 10.0, 1e-12);
}

TEST(Scenario, DefaultCellAndRank) {
  const ScenarioConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [sc, ch] = generate_scenario(cfg, seed);
    for (const auto* group : {&sc.lues, &sc.eues})
      for (const auto& u : *group) {
        const auto p = cell_position(u, sc.bs);
        EXPECT_TRUE(sc.cell.contains(p)) << p.x << "," << p.y;
        EXPECT_GE(u.theta, 0.0);
        EXPECT_LT(u.theta, 2.0 * kPi);
      }
    Eigen::JacobiSVD<CMat> svd(ch.lue);
    EXPECT_GT(svd.singularValues().minCoeff(), 1e-8 * svd.singularValues().maxCoeff());
    for (std::size_t a = 0; a < sc.lues.size(); ++a)
      for (std::size_t b = a + 1; b < sc.lues.size(); ++b)
        EXPECT_GE(detail::angular_gap(sc.lues[a].theta, sc.lues[b].theta), cfg.min_separation - 1e-12);
  }
}

TEST(Scenario, PureFunctionOfSeed) {
  ScenarioConfig cfg;
  cfg.nlos_paths = 2;
  auto [s1, c1] = generate_scenario(cfg, 42);
  auto [s2, c2] = generate_scenario(cfg, 42);
  auto [s3, c3] = generate_scenario(cfg, 43);
  EXPECT_EQ(c1.lue, c2.lue);
  EXPECT_EQ(c1.eue, c2.eue);
  EXPECT_NE(c1.lue, c3.lue);
}

TEST(Scenario, RejectsBadConfig) {
  ScenarioConfig cfg;
  cfg.k_users = 0;
  EXPECT_THROW(generate_scenario(cfg, 0), ConfigError);
  cfg = {};
  cfg.sigma2 = 0.0;
  EXPECT_THROW(generate_scenario(cfg, 0), ConfigError);
  cfg = {};
  cfg.eue_distance_ratio = 0.0;
  EXPECT_THROW(generate_scenario(cfg, 0), ConfigError);
}

TEST(Scenario, DefaultsSitInsideRayleighDistance) {
  const ScenarioConfig cfg;
  const auto g = ArrayGeometry::from_carrier(cfg.n_x, cfg.n_z, cfg.carrier_hz);
  EXPECT_EQ(g.n_b(), 81);
  EXPECT_LT(cfg.lue_distance_max, rayleigh_distance(g));
}
