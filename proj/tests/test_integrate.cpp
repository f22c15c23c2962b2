#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "relcm/integrate.hpp"
#include "relcm/minkowski.hpp"

using namespace relcm;

namespace {

constexpr double kTwoPi = 6.283185307179586;

const RhsFunction kOscillator = [](double, std::span<const double> y, std::span<double> dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
};

const RhsFunction kGrowth = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0]; };

const RhsFunction kZero = [](double, std::span<const double>, std::span<double> dy) {
  for (auto& v : dy) v = 0.0;
};

double energy(const StateVector& y) { return 0.5 * (y[0] * y[0] + y[1] * y[1]); }

FlowProblem adaptive(const RhsFunction& f, StateVector y0, double s1) {
  FlowProblem p{f, std::move(y0), 0.0, s1, {}};
  p.adaptive.abs_tol = 1e-10;
  p.adaptive.rel_tol = 1e-10;
  return p;
}

}  // namespace

TEST(Integrate, Rk4OscillatorEnergy) {
  const auto t = rk4_fixed({kOscillator, {1.0, 0.0}, 0.0, kTwoPi, {}}, 1e-3);
  for (const auto& y : t.states) EXPECT_NEAR(energy(y), 0.5, 1e-9);
  EXPECT_DOUBLE_EQ(t.sigma.back(), kTwoPi);
}

TEST(Integrate, Rk4ZeroRhsIsConstant) {
  const auto t = rk4_fixed({kZero, {1.0, -2.0, 3.0}, 0.0, 1.0, {}}, 0.1);
  for (const auto& y : t.states) EXPECT_EQ(y, (StateVector{1.0, -2.0, 3.0}));
}

TEST(Integrate, Rk4Exponential) {
  const auto t = rk4_fixed({kGrowth, {2.0}, 0.0, 1.0, {}}, 1e-3);
  EXPECT_NEAR(t.states.back()[0], 2.0 * std::exp(1.0), 1e-10);
}

TEST(Integrate, Rk4ConvergesAtFourthOrder) {
  auto error = [](double h) {
    const auto t = rk4_fixed({kOscillator, {1.0, 0.0}, 0.0, kTwoPi, {}}, h);
    return std::hypot(t.states.back()[0] - 1.0, t.states.back()[1]);
  };
  const double ratio = error(kTwoPi / 100) / error(kTwoPi / 200);
  EXPECT_NEAR(ratio, 16.0, 0.5);
}

TEST(Integrate, Rk4Backwards) {
  const auto t = rk4_fixed({kGrowth, {1.0}, 0.0, -1.0, {}}, 1e-3);
  EXPECT_NEAR(t.states.back()[0], std::exp(-1.0), 1e-10);
  EXPECT_DOUBLE_EQ(t.sigma.back(), -1.0);
}

TEST(Integrate, Rk4RejectsBadStep) {
  EXPECT_THROW(rk4_fixed({kZero, {0.0}, 0.0, 1.0, {}}, 0.0), std::invalid_argument);
}

TEST(Integrate, NonFiniteRhsReportsSigma) {
  const RhsFunction blowup = [](double s, std::span<const double>, std::span<double> dy) {
    dy[0] = s > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  try {
    rk4_fixed({blowup, {0.0}, 0.0, 1.0, {}}, 0.1);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    ASSERT_TRUE(e.sigma().has_value());
    EXPECT_GT(*e.sigma(), 0.5);
    EXPECT_LE(*e.sigma(), 0.6 + 1e-12);
  }
}

TEST(Integrate, Rk45Oscillator) {
  const auto t = rk45_adaptive(adaptive(kOscillator, {1.0, 0.0}, kTwoPi));
  for (const auto& y : t.states) EXPECT_NEAR(energy(y), 0.5, 1e-9);
  EXPECT_NEAR(t.states.back()[0], 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(t.sigma.back(), kTwoPi);
}

TEST(Integrate, Rk45ZeroRhsAndExponential) {
  const auto z = rk45_adaptive(adaptive(kZero, {4.0}, 3.0));
  for (const auto& y : z.states) EXPECT_EQ(y[0], 4.0);
  const auto e = rk45_adaptive(adaptive(kGrowth, {1.0}, 1.0));
  EXPECT_NEAR(e.states.back()[0], std::exp(1.0), 1e-9);
}

TEST(Integrate, Rk45StepUnderflow) {
  // y' = y^2 blows up at sigma = 1
  const RhsFunction blowup = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
  try {
    rk45_adaptive(adaptive(blowup, {1.0}, 2.0));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("stiffness or singularity encountered"), std::string::npos);
    ASSERT_TRUE(e.sigma().has_value());
    EXPECT_NEAR(*e.sigma(), 1.0, 1e-3);
  }
}

TEST(Integrate, Rk45RejectsBadTolerances) {
  auto p = adaptive(kZero, {0.0}, 1.0);
  p.adaptive.rel_tol = 0.0;
  EXPECT_THROW(rk45_adaptive(p), std::invalid_argument);
}

TEST(Integrate, FiniteDiffRate) {
  const FourVector c{1, 2, 3, 4}, v{0.5, -1, 2, 0};
  EXPECT_EQ(max_abs(finite_diff_rate([&](double) { return c; }, 0.3, 1e-2)), 0.0);
  EXPECT_LT(max_abs_diff(finite_diff_rate([&](double s) { return c + s * v; }, 0.3, 1e-2), v), 1e-12);
  EXPECT_NEAR(finite_diff_rate([](double s) { return std::sin(s); }, 0.4, 1e-2), std::cos(0.4), 1e-9);
}

TEST(Integrate, RefineMinimaOfOscillator) {
  // |y0| has interior minima where cos crosses zero
  const auto t = rk4_fixed({kOscillator, {1.0, 0.0}, 0.0, kTwoPi, {}}, 0.05);
  const auto minima = refine_minima(kOscillator, t, [](const StateVector& y) { return std::fabs(y[0]); });
  ASSERT_EQ(minima.size(), 2u);
  EXPECT_NEAR(minima[0].sigma, kTwoPi / 4, 1e-6);
  EXPECT_NEAR(minima[1].sigma, 3 * kTwoPi / 4, 1e-6);
}

TEST(Integrate, GoldenSection) {
  EXPECT_NEAR(golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10), 0.3, 1e-9);
}
