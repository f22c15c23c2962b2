#include <gtest/gtest.h>

#include "relcm/coulomb_scalar.hpp"
#include "relcm/integrate.hpp"

using namespace relcm;
using namespace relcm::coulomb;

namespace {

Trajectory evolve(const CSConfig& cfg, const CSState& s0, double t1) {
  FlowProblem prob{flow_rhs(cfg), pack(s0), 0.0, t1};
  prob.adaptive.abs_tol = prob.adaptive.rel_tol = 1e-12;
  return rk45_adaptive(prob);
}

}  // namespace

TEST(CoulombScalar, HamiltonianAsymptotics) {
  const CSConfig cfg{1.0, -0.3, 1};
  const CSState far{{1e8, 0, 0}, {0.3, 0.4, 0}};
  EXPECT_NEAR(hamiltonian(far, cfg), std::sqrt(1.25), 1e-8);
  const CSState rest{{2.0, 0, 0}, {0, 0, 0}};
  EXPECT_NEAR(hamiltonian(rest, cfg), std::sqrt(1.0 + 0.09 / 4.0) - 0.15, 1e-15);
}

TEST(CoulombScalar, HamiltonEquationsMatchGradient) {
  for (int sign : {1, -1}) {
    const CSConfig cfg{1.3, -0.4, sign};
    const CSState s{{0.7, -0.5, 0.2}, {0.1, 0.6, -0.3}};
    const auto rate = hamilton_rhs(s, cfg);
    const double h = 1e-5;
    for (std::size_t i = 0; i < 3; ++i) {
      CSState a = s, b = s;
      a.r[i] += h;
      b.r[i] -= h;
      EXPECT_NEAR(rate.dp[i], -(hamiltonian(a, cfg) - hamiltonian(b, cfg)) / (2 * h), 1e-8);
      a = s;
      b = s;
      a.p[i] += h;
      b.p[i] -= h;
      EXPECT_NEAR(rate.dr[i], (hamiltonian(a, cfg) - hamiltonian(b, cfg)) / (2 * h), 1e-8);
    }
  }
}

TEST(CoulombScalar, FreeParticleMovesStraight) {
  const CSConfig cfg{1.0, 0.0, 1};
  const CSState s0{{1.0, 2.0, 0.0}, {0.3, -0.4, 0.0}};
  const CSState s1 = unpack(evolve(cfg, s0, 3.0).back());
  const Vec3 v = s0.p / std::sqrt(1.25);
  EXPECT_LT(max_abs_diff(s1.r, s0.r + 3.0 * v), 1e-10);
  EXPECT_LT(max_abs_diff(s1.p, s0.p), 1e-14);
}

TEST(CoulombScalar, MomentumAndKMagnitudeIdentities) {
  for (int sign : {1, -1}) {
    const CSConfig cfg{1.0, -0.3, sign};
    const CSState s{{0.7, -0.5, 0.2}, {0.1, 0.6, -0.3}};
    const double E = hamiltonian(s, cfg), r = norm(s.r);
    EXPECT_NEAR(dot(s.p, s.p), momentum_squared_from_energy(E, r, cfg), 1e-12);
    const Vec3 K = lrl_vector(s, cfg);
    EXPECT_NEAR(dot(K, K), lrl_magnitude_squared(E, norm(angular_momentum(s)), cfg), 1e-12);
  }
  const CSConfig cfg{2.0, -0.5, 1};
  EXPECT_DOUBLE_EQ(lrl_magnitude_squared(2.0, 0.7, cfg), 4.0 * 0.25);
}

TEST(CoulombScalar, BoundOrbitIsClosedConic) {
  const CSConfig cfg{1.0, -0.3, 1};
  const CSState s0 = planar_state(1.0, 0.1, 0.35);
  const Vec3 K0 = lrl_vector(s0, cfg);
  const double E0 = hamiltonian(s0, cfg);
  const auto traj = evolve(cfg, s0, 200.0);
  const auto states = states_of(traj);
  for (const auto& s : states) {
    EXPECT_NEAR(hamiltonian(s, cfg), E0, 1e-10);
    EXPECT_LT(max_abs_diff(lrl_vector(s, cfg), K0), 1e-9);
  }
  EXPECT_LT(orbit_residual(states, cfg), 1e-8);
  const auto peri = perihelia(cfg, traj);
  ASSERT_GE(peri.size(), 2u);
  for (const auto& p : peri) EXPECT_LT(line_angle(unpack(p.state).r, K0), 1e-6);
}

TEST(CoulombScalar, OrbitAngleMeasuredFromClosestApproach) {
  EXPECT_NEAR(orbit_angle({-1, 0, 0}, {1, 0, 0}), 0.0, 1e-15);
  EXPECT_NEAR(orbit_angle({0, 1, 0}, {1, 0, 0}), 1.5707963267948966, 1e-15);
  EXPECT_NEAR(line_angle({-1, 0, 0}, {1, 0, 0}), 0.0, 1e-15);
}

TEST(CoulombScalar, Singularities) {
  const CSConfig cfg;
  const CSState origin{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(hamiltonian(origin, cfg), NumericalError);
  const CSState radial{{1, 0, 0}, {0.5, 0, 0}};
  EXPECT_THROW(orbit_residual({radial}, cfg), std::domain_error);
  EXPECT_THROW((CSConfig{1.0, 0.3, 0}.validate()), ConfigError);
  EXPECT_THROW((CSConfig{0.0, 0.3, 1}.validate()), ConfigError);
}
