#include <gtest/gtest.h>

#include <random>

#include "relcm/integrate.hpp"
#include "relcm/sv_twobody.hpp"

using namespace relcm;
using namespace relcm::sv;

namespace {

SVConfig bound_config() {
  SVConfig cfg;
  cfg.m1 = 1.0;
  cfg.m2 = 2.0;
  cfg.kappa = 0.3;
  return cfg;
}

SVPhase bound_state(const SVConfig& cfg, std::uint64_t seed = 1) {
  InitRequest req;
  req.M_target = 2.95;
  req.ell_target = 0.5;
  req.seed = seed;
  return init_state(cfg, req);
}

SVPhase flow(const SVConfig& cfg, const SVPhase& p, double sigma) {
  FlowProblem prob{flow_rhs(cfg), pack(p), 0.0, sigma};
  prob.adaptive.abs_tol = prob.adaptive.rel_tol = 1e-12;
  return unpack(rk45_adaptive(prob).back());
}

}  // namespace

TEST(SpinlessVector, BFactoredMatchesExpanded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int i = 0; i < 50; ++i) {
    const double M2 = u(rng) * u(rng), m1 = u(rng), m2 = u(rng);
    EXPECT_NEAR(b_of_M(M2, m1, m2), b_of_M_expanded(M2, m1, m2), 1e-12 * std::fmax(1.0, std::fabs(b_of_M(M2, m1, m2))));
    const double h = 1e-4 * M2;
    const double fd = (b_of_M(M2 + h, m1, m2) - b_of_M(M2 - h, m1, m2)) / (2.0 * h);
    EXPECT_NEAR(b_prime(M2, m1, m2), fd, 1e-6 * std::fmax(1.0, std::fabs(fd)));
  }
  EXPECT_THROW(b_of_M(0.0, 1.0, 2.0), std::domain_error);
}

TEST(SpinlessVector, BVanishesAtThresholds) {
  EXPECT_NEAR(b_of_M(9.0, 1.0, 2.0), 0.0, 1e-15);
  EXPECT_NEAR(b_of_M(1.0, 1.0, 2.0), 0.0, 1e-15);
  EXPECT_LT(b_of_M(8.0, 1.0, 2.0), 0.0);
  EXPECT_GT(b_of_M(10.0, 1.0, 2.0), 0.0);
}

TEST(SpinlessVector, GSignAndZero) {
  SVConfig cfg = bound_config();
  EXPECT_NEAR(g_of_M(1.0, cfg), 0.0, 1e-15);
  EXPECT_GT(g_of_M(9.0, cfg), 0.0);
  cfg.chi = -1;
  EXPECT_LT(g_of_M(9.0, cfg), 0.0);
  cfg.alpha = -1;
  EXPECT_NEAR(g_of_M(9.0, cfg), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(g_prime(cfg), -0.15);
}

TEST(SpinlessVector, InitStateIsAdmissible) {
  const SVConfig cfg = bound_config();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SVPhase p = bound_state(cfg, seed);
    EXPECT_NEAR(constraint_phi(p, cfg), 0.0, 1e-10);
    EXPECT_NEAR(dot(p.x, p.x), 0.0, 1e-12);
    EXPECT_NEAR(constraint_phi_pi(p, cfg), constraint_phi(p, cfg), 1e-10);
    EXPECT_NEAR(dot(pi_internal(p), p.P), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(-dot(p.P, p.P)), 2.95, 1e-12);
    EXPECT_NEAR(std::sqrt(half_square(internal_ell(p))), 0.5, 1e-10);
    EXPECT_GT(chi_indicator(p, cfg) * cfg.chi, 0.0);
  }
}

TEST(SpinlessVector, InitIsReproducible) {
  const SVConfig cfg = bound_config();
  const SVPhase a = bound_state(cfg, 7), b = bound_state(cfg, 7), c = bound_state(cfg, 8);
  EXPECT_EQ(pack(a), pack(b));
  EXPECT_NE(pack(a), pack(c));
}

TEST(SpinlessVector, InitRejectsImpossibleOrbits) {
  SVConfig cfg = bound_config();
  cfg.kappa = -0.3;
  InitRequest req;
  req.M_target = 2.95;
  EXPECT_THROW(init_state(cfg, req), std::domain_error);
  req.ell_target = 0.0;
  EXPECT_THROW(init_state(bound_config(), req), std::domain_error);
}

TEST(SpinlessVector, FlowMatchesPoissonBrackets) {
  SVConfig cfg = bound_config();
  cfg.freeze_longitudinal = false;
  const SVPhase p = bound_state(cfg, 3);
  const CanonicalState chart = to_chart(p);
  const Observable phi = phi_observable(cfg);
  const StateVector y = pack(p);
  StateVector dy(16);
  flow_rhs(cfg)(0.0, y, dy);
  for (std::size_t i = 0; i < 16; ++i) {
    const Observable coord = [i](const CanonicalState& s) { return s.get(i); };
    EXPECT_NEAR(dy[i], 0.5 * bracket(coord, phi, chart), 1e-7 * std::fmax(1.0, std::fabs(dy[i])));
  }
}

TEST(SpinlessVector, InvariantsConservedAlongFlow) {
  const SVConfig cfg = bound_config();
  const SVPhase p0 = bound_state(cfg, 2);
  const SVPhase p1 = flow(cfg, p0, 5.0);
  EXPECT_NEAR(constraint_phi(p1, cfg), 0.0, 1e-9);
  EXPECT_NEAR(dot(p1.x, p1.x), 0.0, 1e-9);
  EXPECT_LT(max_abs_diff(p1.P, p0.P), 1e-12);
  EXPECT_LT(max_abs_diff(total_angular_momentum(p1), total_angular_momentum(p0)), 1e-9);
  EXPECT_LT(max_abs_diff(lrl_vector(p1, cfg), lrl_vector(p0, cfg)), 1e-8);
  EXPECT_LT(max_abs_diff(center_of_inertia(p1), center_of_inertia(p0)), 1e-9);
}

TEST(SpinlessVector, ConstantGaugeOnlyRescalesSigma) {
  SVConfig cfg = bound_config();
  const SVPhase p0 = bound_state(cfg, 4);
  const SVPhase a = flow(cfg, p0, 4.0);
  cfg.lambda_gauge = 2.0;
  const SVPhase b = flow(cfg, p0, 2.0);
  EXPECT_LT(max_abs_diff(a.x, b.x), 1e-9);
  EXPECT_LT(max_abs_diff(a.z, b.z), 1e-9);
}

TEST(SpinlessVector, ClosedFormsAgree) {
  const SVConfig cfg = bound_config();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SVPhase p = bound_state(cfg, seed);
    const auto f = closed_forms(p, cfg);
    EXPECT_LT(max_abs_diff(f.Q, f.Q_from_K), 1e-10);
    EXPECT_LT(max_abs_diff(f.R1, f.R1_alt), 1e-10);
    EXPECT_LT(k_squared_check(p, cfg), 1e-9);
    EXPECT_NEAR(dot(f.K, p.P), 0.0, 1e-10);
  }
}

TEST(SpinlessVector, KSquaredNeedsOnShellState) {
  const SVConfig cfg = bound_config();
  SVPhase p = bound_state(cfg);
  p.q = 1.1 * p.q;
  EXPECT_THROW(k_squared_check(p, cfg), std::domain_error);
}

TEST(SpinlessVector, ChiFlipIsReported) {
  SVConfig cfg = bound_config();
  const SVPhase p = bound_state(cfg);
  cfg.chi = -1;
  EXPECT_THROW(check_chi(p, cfg, 1.0), NumericalError);
}

TEST(SpinlessVector, SingularSurfaceIsReported) {
  const SVConfig cfg = bound_config();
  SVPhase p = bound_state(cfg);
  p.x = FourVector{};
  EXPECT_THROW(constraint_phi(p, cfg), NumericalError);
}

TEST(SpinlessVector, LorentzCovariance) {
  const SVConfig cfg = bound_config();
  const SVPhase p = bound_state(cfg, 5);
  const LorentzMatrix L = boost_matrix({0.6, 0.0, 0.0});
  const SVPhase q = transformed(p, L);
  EXPECT_NEAR(constraint_phi(q, cfg), constraint_phi(p, cfg), 1e-10);
  EXPECT_LT(max_abs_diff(lrl_vector(q, cfg), L(lrl_vector(p, cfg))), 1e-10);
  EXPECT_LT(max_abs_diff(closed_forms(q, cfg).Q, L(closed_forms(p, cfg).Q)), 1e-10);
}

TEST(SpinlessVector, ConfigValidation) {
  SVConfig cfg = bound_config();
  cfg.alpha = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = bound_config();
  cfg.lambda_gauge = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = bound_config();
  cfg.m2 = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
