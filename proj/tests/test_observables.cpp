#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "relcm/observables.hpp"
#include "test_support.hpp"

using namespace relcm;

namespace {

struct Particle {
  double m;
  FourVector x;
  FourVector u;
};

GlobalState global_of(const std::vector<Particle>& ps) {
  GlobalState g;
  for (const auto& p : ps) {
    g.P += p.m * p.u;
    g.J += wedge(p.x, p.m * p.u);
  }
  return g;
}

std::vector<Particle> random_particles(std::mt19937_64& rng, int n) {
  std::vector<Particle> ps;
  for (int a = 0; a < n; ++a) {
    const FourVector p = test::random_timelike(rng);
    const double m = invariant_mass(p);
    ps.push_back({m, test::random_vector(rng, 2.0), p / m});
  }
  return ps;
}

}  // namespace

TEST(Observables, SingleParticleAtRestAtOrigin) {
  const GlobalState g{{1.5, 0, 0, 0}, {}};
  EXPECT_EQ(max_abs(center_of_inertia(g)), 0.0);
  EXPECT_EQ(max_abs(spatial_internal_ell(g)), 0.0);
}

TEST(Observables, InertiaCentreIsOrthogonalToP) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto g = global_of(random_particles(rng, 3));
    EXPECT_LT(std::fabs(dot(center_of_inertia(g), g.P)), 1e-12 * std::fmax(1.0, max_abs(g.J)));
  }
}

TEST(Observables, TwoBodySumFormOfInertiaCentre) {
  // x1, x2 simultaneous in the rest frame: X_I = sum E_a x_a / M spatially
  const FourVector x1{0, 1, 0, 0}, x2{0, -0.5, 1, 0};
  const FourVector p1{std::sqrt(1.0 + 0.25), 0, 0.5, 0}, p2{std::sqrt(4.0 + 0.25), 0, -0.5, 0};
  GlobalState g{p1 + p2, wedge(x1, p1) + wedge(x2, p2)};
  const double M = invariant_mass(g.P);
  const FourVector expected = (p1[0] * x1 + p2[0] * x2) / M;
  EXPECT_LT(max_abs_diff(center_of_inertia(g), FourVector(0.0, expected.spatial())), 1e-14);
}

TEST(Observables, TranslationShiftsInertiaCentreByProjectedVector) {
  std::mt19937_64 rng(2);
  auto ps = random_particles(rng, 3);
  const auto g = global_of(ps);
  const FourVector a{0.3, -1.0, 2.0, 0.5};
  for (auto& p : ps) p.x += a;
  const auto g2 = global_of(ps);
  EXPECT_LT(max_abs_diff(center_of_inertia(g2), translate_cm(center_of_inertia(g), a, g.P)), 1e-12);
  EXPECT_LT(max_abs_diff(spatial_internal_ell(g2), spatial_internal_ell(g)), 1e-12);
}

TEST(Observables, EllThreeTermFormAgrees) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto g = global_of(random_particles(rng, 2));
    const double M2 = -dot(g.P, g.P);
    const FourVector Pl = g.P.lowered();
    AntisymTensor2 three;
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t nu = mu + 1; nu < 4; ++nu) {
        double s = 0.0;
        for (std::size_t la = 0; la < 4; ++la)
          s += (g.J(mu, nu) * g.P[la] + g.J(la, mu) * g.P[nu] + g.J(nu, la) * g.P[mu]) * Pl[la];
        three.set(mu, nu, -s / M2);
      }
    const auto ell = spatial_internal_ell(g);
    EXPECT_LT(max_abs_diff(three, ell), 1e-12);
    EXPECT_LT(max_abs(contract(ell, g.P)), 1e-12);
  }
}

TEST(Observables, EllIsBoostCovariant) {
  std::mt19937_64 rng(4);
  auto ps = random_particles(rng, 3);
  const auto g = global_of(ps);
  const LorentzMatrix L = boost_matrix({0.6, 0.0, 0.0});
  for (auto& p : ps) {
    p.x = L(p.x);
    p.u = L(p.u);
  }
  const auto g2 = global_of(ps);
  EXPECT_LT(max_abs_diff(spatial_internal_ell(g2), L(spatial_internal_ell(g))), 1e-9);
  EXPECT_LT(max_abs_diff(center_of_inertia(g2), L(center_of_inertia(g))), 1e-9);
}

TEST(Observables, ShiftFromInternal) {
  std::mt19937_64 rng(5);
  const FourVector P = test::random_timelike(rng);
  const Projector D(P);
  const AntisymTensor2 ell = D.apply(test::random_tensor(rng));
  EXPECT_LT(max_abs(shift_from_internal(ell, P)), 1e-12);

  const FourVector Q = D.apply(test::random_vector(rng));
  EXPECT_LT(max_abs_diff(shift_from_internal(internal_from_parts(ell, Q, P), P), Q), 1e-12);

  const AntisymTensor2 j = test::random_tensor(rng);
  const FourVector got = shift_from_internal(j, P);
  const double M2 = -dot(P, P);
  for (std::size_t mu = 0; mu < 4; ++mu) {
    double s = 0.0;
    for (std::size_t nu = 0; nu < 4; ++nu) s += j(mu, nu) * kMetric[nu] * P[nu];
    EXPECT_NEAR(got[mu], s / M2, 1e-13);
  }
  EXPECT_LT(std::fabs(dot(got, P)), 1e-12);
}

TEST(Observables, CmFromShift) {
  std::mt19937_64 rng(6);
  const auto g = global_of(random_particles(rng, 2));
  EXPECT_EQ(max_abs_diff(cm_from_shift(g, {}), center_of_inertia(g)), 0.0);
  EXPECT_THROW(cm_from_shift(g, g.P), std::domain_error);

  const FourVector Q = Projector(g.P).apply(test::random_vector(rng));
  const auto d = decompose(g, Q);
  // eps_{mu nu la rho} (J - j)^{mu nu} P^la = 0
  const AntisymTensor2 diff = g.J - d.j;
  const FourVector U = g.P / d.M;
  EXPECT_LT(max_abs(dualize(diff, U)), 1e-10);
  const auto a = inertia_centroid(g), b = shifted_centroid(g, Q);
  for (double tau : {-2.0, 0.0, 3.5}) EXPECT_LT(max_abs_diff(b.at(tau) - a.at(tau), Q), 1e-12);
  EXPECT_LT(std::fabs(dot(d.X_o, g.P)), 1e-10);
  EXPECT_LT(std::fabs(dot(d.ell_v, g.P)), 1e-10);
}

TEST(Observables, NewtonianCm) {
  const std::vector<WeightedEvent> one{{2.0, {1, 2, 3, 4}}};
  EXPECT_EQ(max_abs_diff(newtonian_cm(one), FourVector{1, 2, 3, 4}), 0.0);
  const std::vector<WeightedEvent> two{{1.0, {0, 0, 0, 0}}, {1.0, {2, 4, 0, -2}}};
  EXPECT_EQ(max_abs_diff(newtonian_cm(two), FourVector{1, 2, 0, -1}), 0.0);
  const std::vector<WeightedEvent> three{{1.0, {0, 1, 0, 0}}, {2.0, {0, 0, 1, 0}}, {3.0, {0, 0, 0, 1}}};
  EXPECT_LT(max_abs_diff(newtonian_cm(three), FourVector{0, 1.0 / 6, 2.0 / 6, 3.0 / 6}), 1e-15);
  EXPECT_THROW(newtonian_cm(std::vector<WeightedEvent>{}), std::invalid_argument);
  EXPECT_THROW(newtonian_cm(std::vector<WeightedEvent>{{0.0, {}}}), std::invalid_argument);
}

namespace {
struct StaticModel {
  using State = double;
  FourVector P{3, 0, 0, 0};
  FourVector total_momentum(double) const { return P; }
  FourVector newtonian_cm_rate(double) const { return {1, 0, 0, 0}; }
};
}  // namespace

TEST(Observables, StaticSystemHasNoProjectedCmRate) {
  EXPECT_LT(max_abs(cm_integration_residual(StaticModel{}, 0.0, {})), 1e-15);
}
