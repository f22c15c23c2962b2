#pragma once

// Deterministic ODE integration (classic RK4 and an embedded Dormand-Prince
// 5(4) pair) plus the finite-difference and extremum-refinement helpers used
// as derivative oracles by the dynamical models.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "relcm/errors.hpp"

namespace relcm {

using StateVector = std::vector<double>;
using RhsFunction = std::function<void(double sigma, std::span<const double> y, std::span<double> dy)>;

struct AdaptiveOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 1e-3;
  double max_step = 0.0;  // 0: unlimited
  double min_step = 1e-14;
  std::size_t max_steps = 10'000'000;
};

struct FlowProblem {
  RhsFunction rhs;
  StateVector y0;
  double sigma0 = 0.0;
  double sigma1 = 1.0;
  AdaptiveOptions adaptive{};

  std::size_t dimension() const { return y0.size(); }
};

struct Trajectory {
  std::vector<double> sigma;
  std::vector<StateVector> states;
  std::size_t rejected_steps = 0;

  std::size_t size() const { return sigma.size(); }
  const StateVector& back() const { return states.back(); }
};

namespace detail {

inline void eval_rhs(const RhsFunction& f, double s, std::span<const double> y, std::span<double> dy) {
  f(s, y, dy);
  for (double v : dy)
    if (!std::isfinite(v)) throw NumericalError("non-finite right-hand side", s);
}

inline void rk4_step(const RhsFunction& f, double s, double h, StateVector& y,
                     std::array<StateVector, 5>& work) {
  const std::size_t n = y.size();
  auto& [k1, k2, k3, k4, tmp] = work;
  eval_rhs(f, s, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  eval_rhs(f, s + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  eval_rhs(f, s + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  eval_rhs(f, s + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

/// Classic fourth-order Runge-Kutta with step h (the last step is shortened
/// to land on sigma1). Integrates backwards when sigma1 < sigma0.
inline Trajectory rk4_fixed(const FlowProblem& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_fixed: step must be positive");
  const double dir = p.sigma1 >= p.sigma0 ? 1.0 : -1.0;
  const double span = std::fabs(p.sigma1 - p.sigma0);
  const auto n_full = static_cast<std::size_t>(std::floor(span / h));
  Trajectory out;
  StateVector y = p.y0;
  std::array<StateVector, 5> work;
  for (auto& w : work) w.resize(y.size());
  out.sigma.push_back(p.sigma0);
  out.states.push_back(y);
  for (std::size_t k = 0; k < n_full; ++k) {
    const double s = p.sigma0 + dir * h * static_cast<double>(k);
    detail::rk4_step(p.rhs, s, dir * h, y, work);
    out.sigma.push_back(p.sigma0 + dir * h * static_cast<double>(k + 1));
    out.states.push_back(y);
  }
  const double rest = span - h * static_cast<double>(n_full);
  if (rest > 1e-12 * std::fmax(1.0, span)) {
    detail::rk4_step(p.rhs, out.sigma.back(), dir * rest, y, work);
    out.sigma.push_back(p.sigma1);
    out.states.push_back(y);
  } else {
    out.sigma.back() = p.sigma1;
  }
  return out;
}

/// n equal RK4 steps from (s0, y0) to s1; smooth in s1, used for evaluating
/// the flow between stored samples.
inline StateVector rk4_advance(const RhsFunction& f, double s0, const StateVector& y0, double s1,
                               std::size_t n) {
  StateVector y = y0;
  std::array<StateVector, 5> work;
  for (auto& w : work) w.resize(y.size());
  const double h = (s1 - s0) / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) detail::rk4_step(f, s0 + h * static_cast<double>(k), h, y, work);
  return y;
}

/// Dormand-Prince 5(4) embedded pair with error-per-step control. Every
/// accepted step is sampled.
inline Trajectory rk45_adaptive(const FlowProblem& p) {
  const AdaptiveOptions& o = p.adaptive;
  if (!(o.abs_tol > 0.0) || !(o.rel_tol > 0.0))
    throw std::invalid_argument("rk45_adaptive: tolerances must be positive");

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = p.dimension();
  const double dir = p.sigma1 >= p.sigma0 ? 1.0 : -1.0;
  Trajectory out;
  StateVector y = p.y0, ynew(n), tmp(n);
  std::array<StateVector, 7> k;
  for (auto& v : k) v.resize(n);

  double s = p.sigma0;
  double h = std::fabs(o.initial_step);
  if (o.max_step > 0.0) h = std::min(h, o.max_step);
  out.sigma.push_back(s);
  out.states.push_back(y);
  if (p.sigma1 == p.sigma0) return out;

  detail::eval_rhs(p.rhs, s, y, k[0]);
  std::size_t steps = 0;
  while (dir * (p.sigma1 - s) > 0.0) {
    if (++steps > o.max_steps) throw NumericalError("rk45_adaptive: step budget exhausted", s);
    const double remaining = std::fabs(p.sigma1 - s);
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    const double hs = dir * h;
    auto stage = [&](std::initializer_list<std::pair<std::size_t, double>> coefs) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = y[i];
        for (auto [j, a] : coefs) acc += hs * a * k[j][i];
        tmp[i] = acc;
      }
    };
    stage({{0, a21}});
    detail::eval_rhs(p.rhs, s + c2 * hs, tmp, k[1]);
    stage({{0, a31}, {1, a32}});
    detail::eval_rhs(p.rhs, s + c3 * hs, tmp, k[2]);
    stage({{0, a41}, {1, a42}, {2, a43}});
    detail::eval_rhs(p.rhs, s + c4 * hs, tmp, k[3]);
    stage({{0, a51}, {1, a52}, {2, a53}, {3, a54}});
    detail::eval_rhs(p.rhs, s + c5 * hs, tmp, k[4]);
    stage({{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}});
    detail::eval_rhs(p.rhs, s + hs, tmp, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    detail::eval_rhs(p.rhs, s + hs, ynew, k[6]);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = hs * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] +
                              e6 * k[5][i] + e7 * k[6][i]);
      const double scale = o.abs_tol + o.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      err = std::max(err, std::fabs(ei) / scale);
    }
    if (!std::isfinite(err)) throw NumericalError("non-finite local error estimate", s);

    if (err <= 1.0) {
      s = last ? p.sigma1 : s + hs;
      y.swap(ynew);
      k[0].swap(k[6]);
      out.sigma.push_back(s);
      out.states.push_back(y);
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      ++out.rejected_steps;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
    if (o.max_step > 0.0) h = std::min(h, o.max_step);
    if (h < o.min_step * std::fmax(1.0, std::fabs(s)))
      throw NumericalError("stiffness or singularity encountered", s);
  }
  return out;
}

/// Fourth-order central difference (-f(s+2h) + 8 f(s+h) - 8 f(s-h) + f(s-2h)) / 12h.
template <class F>
auto finite_diff_rate(F&& f, double s0, double h) {
  const auto fp2 = f(s0 + 2.0 * h);
  const auto fp1 = f(s0 + h);
  const auto fm1 = f(s0 - h);
  const auto fm2 = f(s0 - 2.0 * h);
  return (8.0 * (fp1 - fm1) - (fp2 - fm2)) * (1.0 / (12.0 * h));
}

/// Golden-section search for a minimum of a unimodal f on [a, b].
template <class F>
double golden_section_minimize(F&& f, double a, double b, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::fabs(b - a) > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct RefinedExtremum {
  double sigma;
  StateVector state;
};

/// Locates interior local minima of `metric` over the sampled trajectory and
/// refines each with golden-section search, evaluating the flow between
/// samples with smooth fixed-count RK4 sub-stepping.
template <class Metric>
std::vector<RefinedExtremum> refine_minima(const RhsFunction& rhs, const Trajectory& traj,
                                           Metric&& metric, std::size_t substeps = 64) {
  std::vector<RefinedExtremum> out;
  if (traj.size() < 3) return out;
  std::vector<double> m(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) m[i] = metric(traj.states[i]);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    if (!(m[i] <= m[i - 1] && m[i] < m[i + 1])) continue;
    const std::size_t base = i - 1;
    auto eval = [&](double s) {
      return metric(rk4_advance(rhs, traj.sigma[base], traj.states[base], s, substeps));
    };
    const double lo = traj.sigma[i - 1], hi = traj.sigma[i + 1];
    const double tol = 1e-15 * std::fmax(1.0, std::fabs(hi)) + 1e-13 * std::fabs(hi - lo);
    const double s_min = golden_section_minimize(eval, lo, hi, tol);
    out.push_back({s_min, rk4_advance(rhs, traj.sigma[base], traj.states[base], s_min, substeps)});
  }
  return out;
}

}  // namespace relcm
