#pragma once

// Light-like scalar-vector two-body constraint system on the canonical chart
// (z, P, x, q): P conjugate to the common coordinate z, q conjugate to the
// relative light-like separation x. Dynamics are the sigma-flow generated by
// (lambda / 2) phi.

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "relcm/errors.hpp"
#include "relcm/integrate.hpp"
#include "relcm/minkowski.hpp"
#include "relcm/observables.hpp"
#include "relcm/poisson.hpp"

namespace relcm::sv {

struct SVPhase {
  FourVector z;
  FourVector P;
  FourVector x;
  FourVector q;
};

struct SVConfig {
  double m1 = 1.0;
  double m2 = 2.0;
  double kappa = 0.3;  // vector coupling; scalar coupling is alpha * kappa
  int alpha = 1;
  int chi = 1;  // sign of dx_1/dsigma . x
  double lambda_gauge = 1.0;
  /// Adds the light-cone generator x^2 to the flow so that (P.q)/(P.x) stays
  /// constant. Without it that ratio obeys a Riccati equation and q diverges
  /// along x in finite sigma; x, z, Pi, J and K are unaffected either way.
  bool freeze_longitudinal = true;
  /// Optional state-dependent gauge; overrides lambda_gauge when set.
  std::function<double(const SVPhase&)> lambda_fn;

  double M0() const { return m1 + m2; }
  double lambda(const SVPhase& s) const { return lambda_fn ? lambda_fn(s) : lambda_gauge; }

  void validate() const {
    if (!(m1 > 0.0) || !(m2 > 0.0)) throw ConfigError("sv2: masses must be positive");
    if (alpha != 1 && alpha != -1) throw ConfigError("sv2: alpha must be +1 or -1");
    if (chi != 1 && chi != -1) throw ConfigError("sv2: chi must be +1 or -1");
    if (!(lambda_gauge > 0.0)) throw ConfigError("sv2: lambda_gauge must be positive");
    if (!std::isfinite(kappa)) throw ConfigError("sv2: kappa must be finite");
  }
};

/// b(M^2) = (M^2 - M0^2)(M^2 - (m1 - m2)^2) / (4 M^2)
inline double b_of_M(double M2, double m1, double m2) {
  if (M2 == 0.0) throw std::domain_error("b(M^2) undefined at M^2 = 0");
  const double M0 = m1 + m2, dm = m1 - m2;
  return (M2 - M0 * M0) * (M2 - dm * dm) / (4.0 * M2);
}

/// Expanded form (M^4 - 2 M^2 (m1^2 + m2^2) + (m1^2 - m2^2)^2) / (4 M^2).
inline double b_of_M_expanded(double M2, double m1, double m2) {
  if (M2 == 0.0) throw std::domain_error("b(M^2) undefined at M^2 = 0");
  const double a = m1 * m1, c = m2 * m2;
  return (M2 * M2 - 2.0 * M2 * (a + c) + (a - c) * (a - c)) / (4.0 * M2);
}

/// db/d(M^2) = 1/4 - (m1^2 - m2^2)^2 / (4 M^4)
inline double b_prime(double M2, double m1, double m2) {
  const double d = m1 * m1 - m2 * m2;
  return 0.25 - d * d / (4.0 * M2 * M2);
}

/// g(M^2) = (chi kappa / 2)(M^2 - (m1 - alpha m2)^2)
inline double g_of_M(double M2, const SVConfig& cfg) {
  const double d = cfg.m1 - cfg.alpha * cfg.m2;
  return 0.5 * cfg.chi * cfg.kappa * (M2 - d * d);
}

inline double g_prime(const SVConfig& cfg) { return 0.5 * cfg.chi * cfg.kappa; }

/// Scalar invariants of a phase point.
struct Invariants {
  double M2;
  double s;  // P.x
  double A;  // P.q
  double B;  // q.x
};

inline Invariants invariants(const SVPhase& p) {
  Invariants v{-dot(p.P, p.P), dot(p.P, p.x), dot(p.P, p.q), dot(p.q, p.x)};
  if (!(v.M2 > 0.0)) throw NumericalError("sv2: non-timelike total momentum");
  if (v.s == 0.0 || !std::isfinite(v.s)) throw NumericalError("sv2: singular constraint surface P.x = 0");
  return v;
}

/// phi = q^2 - 2 (P.q)(q.x)/(P.x) - 2 g/(P.x) - b
inline double constraint_phi(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  return dot(p.q, p.q) - 2.0 * v.A * v.B / v.s - 2.0 * g_of_M(v.M2, cfg) / v.s - b_of_M(v.M2, cfg.m1, cfg.m2);
}

/// Pi = q - (P.q / P.x) x
inline FourVector pi_internal(const SVPhase& p) {
  const auto v = invariants(p);
  return p.q - (v.A / v.s) * p.x;
}

/// phi written through Pi; equal to constraint_phi up to an x^2 term that
/// vanishes on the light cone.
inline double constraint_phi_pi(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const FourVector Pi = pi_internal(p);
  const double light_cone = v.A * v.A * dot(p.x, p.x) / (v.s * v.s);
  return dot(Pi, Pi) - light_cone - 2.0 * g_of_M(v.M2, cfg) / v.s - b_of_M(v.M2, cfg.m1, cfg.m2);
}

inline FourVector x_perp(const SVPhase& p) { return Projector(p.P).apply(p.x); }

struct PhaseRate {
  FourVector dz, dP, dx, dq;
};

/// Hamilton equations of (lambda/2) phi with analytic partial derivatives.
inline PhaseRate phase_rate(const SVPhase& p, const SVConfig& cfg) {
  const auto [M2, s, A, B] = invariants(p);
  const double lam = cfg.lambda(p);
  const double g = g_of_M(M2, cfg);
  const double gp = g_prime(cfg);
  const double bp = b_prime(M2, cfg.m1, cfg.m2);
  PhaseRate r;
  r.dx = lam * (p.q - (1.0 / s) * (B * p.P + A * p.x));
  r.dq = lam * ((A / s) * p.q - ((A * B + g) / (s * s)) * p.P);
  r.dz = (0.5 * lam) * ((-2.0 * B / s) * p.q + (2.0 * (A * B + g) / (s * s)) * p.x +
                        (4.0 * gp / s + 2.0 * bp) * p.P);
  if (cfg.freeze_longitudinal) {
    const double rho = A / s;
    r.dq -= (lam * (rho * rho + g * M2 / (s * s * s))) * p.x;
  }
  return r;
}

inline StateVector pack(const SVPhase& p) {
  StateVector y(16);
  for (std::size_t i = 0; i < 4; ++i) {
    y[i] = p.z[i];
    y[4 + i] = p.P[i];
    y[8 + i] = p.x[i];
    y[12 + i] = p.q[i];
  }
  return y;
}

inline SVPhase unpack(std::span<const double> y) {
  SVPhase p;
  for (std::size_t i = 0; i < 4; ++i) {
    p.z[i] = y[i];
    p.P[i] = y[4 + i];
    p.x[i] = y[8 + i];
    p.q[i] = y[12 + i];
  }
  return p;
}

inline RhsFunction flow_rhs(const SVConfig& cfg) {
  return [cfg](double, std::span<const double> y, std::span<double> dy) {
    const auto r = phase_rate(unpack(y), cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      dy[i] = r.dz[i];
      dy[4 + i] = r.dP[i];
      dy[8 + i] = r.dx[i];
      dy[12 + i] = r.dq[i];
    }
  };
}

/// J = z ^ P + x ^ q
inline AntisymTensor2 total_angular_momentum(const SVPhase& p) { return wedge(p.z, p.P) + wedge(p.x, p.q); }

inline GlobalState global(const SVPhase& p) { return {p.P, total_angular_momentum(p)}; }

/// l = x_perp ^ Pi
inline AntisymTensor2 internal_ell(const SVPhase& p) { return wedge(x_perp(p), pi_internal(p)); }

/// X_I = z_perp + (P.x / M^2) Pi
inline FourVector center_of_inertia(const SVPhase& p) {
  const auto v = invariants(p);
  return Projector(p.P).apply(p.z) + (v.s / v.M2) * pi_internal(p);
}

/// Individual particle events x_{1,2} = z - c (x + 2 (P.x) P / M^2) +- x / 2,
/// c = (m1^2 - m2^2) / (2 M^2).
inline std::pair<FourVector, FourVector> particle_positions(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const double c = (cfg.m1 * cfg.m1 - cfg.m2 * cfg.m2) / (2.0 * v.M2);
  const FourVector base = p.z - c * (p.x + (2.0 * v.s / v.M2) * p.P);
  return {base + 0.5 * p.x, base - 0.5 * p.x};
}

/// X_N = z + (m1^2 - m2^2)/2 [(1/M0^2 - 1/M^2) x - 2 (P.x) P / M^4]
inline FourVector newtonian_cm(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const double M0 = cfg.M0();
  const double d = 0.5 * (cfg.m1 * cfg.m1 - cfg.m2 * cfg.m2);
  return p.z + d * ((1.0 / (M0 * M0) - 1.0 / v.M2) * p.x - (2.0 * v.s / (v.M2 * v.M2)) * p.P);
}

/// 2 (m1 - m2) / (M0 (M^2 - (m1 - m2)^2))
inline double shift_coefficient(double M2, const SVConfig& cfg) {
  const double dm = cfg.m1 - cfg.m2;
  const double den = M2 - dm * dm;
  if (std::fabs(den) < 1e-14 * std::fmax(1.0, M2)) throw NumericalError("degenerate 2-body kinematics");
  return 2.0 * dm / (cfg.M0() * den);
}

/// K = Pi_nu l^{mu nu} - (g / P.x) x_perp
inline FourVector lrl_vector(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const FourVector X = x_perp(p);
  const FourVector Pi = pi_internal(p);
  return dot(Pi, Pi) * X - dot(Pi, X) * Pi - (g_of_M(v.M2, cfg) / v.s) * X;
}

struct ClosedForms {
  FourVector R1;
  FourVector R1_alt;  // Delta X_N - X_I
  FourVector R2;
  FourVector Q;       // R1 - R2
  FourVector K;
  FourVector Q_from_K;  // C K
};

inline ClosedForms closed_forms(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const double M0 = cfg.M0();
  const double C = shift_coefficient(v.M2, cfg);
  const double D = 0.5 * (cfg.m1 * cfg.m1 - cfg.m2 * cfg.m2) * (1.0 / (M0 * M0) - 1.0 / v.M2);
  const FourVector X = x_perp(p);
  const FourVector Pi = pi_internal(p);
  const double g = g_of_M(v.M2, cfg);
  ClosedForms f;
  f.R1 = D * X - (v.s / v.M2) * Pi;
  f.R1_alt = Projector(p.P).apply(newtonian_cm(p, cfg)) - center_of_inertia(p);
  f.R2 = C * (dot(Pi, X) * Pi - (g / v.s) * X) - (v.s / v.M2) * Pi;
  f.Q = f.R1 - f.R2;
  f.K = lrl_vector(p, cfg);
  f.Q_from_K = C * f.K;
  return f;
}

/// |K.K - b l^2 - g^2 / M^2| with l^2 = l^{mu nu} l_{mu nu} / 2; on-shell only.
inline double k_squared_check(const SVPhase& p, const SVConfig& cfg, double shell_tol = 1e-10) {
  const double phi = constraint_phi(p, cfg);
  if (!(std::fabs(phi) <= shell_tol)) {
    std::ostringstream os;
    os << "sv2: K^2 identity requires an on-shell state (|phi| = " << std::fabs(phi) << ")";
    throw std::domain_error(os.str());
  }
  const auto v = invariants(p);
  const FourVector K = lrl_vector(p, cfg);
  const double g = g_of_M(v.M2, cfg);
  return std::fabs(dot(K, K) - b_of_M(v.M2, cfg.m1, cfg.m2) * half_square(internal_ell(p)) - g * g / v.M2);
}

/// dx_1/dsigma . x; its sign must equal chi.
inline double chi_indicator(const SVPhase& p, const SVConfig& cfg) {
  const auto v = invariants(p);
  const auto r = phase_rate(p, cfg);
  const double c = (cfg.m1 * cfg.m1 - cfg.m2 * cfg.m2) / (2.0 * v.M2);
  const double ds = dot(p.P, r.dx);
  const FourVector dx1 = r.dz - c * (r.dx + (2.0 * ds / v.M2) * p.P) + 0.5 * r.dx;
  return dot(dx1, p.x);
}

/// Throws when the sign of dx_1/dsigma . x differs from the configured chi.
inline void check_chi(const SVPhase& p, const SVConfig& cfg, double sigma) {
  const double ind = chi_indicator(p, cfg);
  if (!(ind * cfg.chi > 0.0)) {
    std::ostringstream os;
    os << "sv2: chi sign flip (dx1/dsigma . x = " << ind << ", configured chi = " << cfg.chi << ")";
    throw NumericalError(os.str(), sigma);
  }
}

struct InitRequest {
  double M_target = 2.9;
  double ell_target = 0.5;  // |l|
  std::uint64_t seed = 1;
  double max_boost_speed = 0.5;
  double event_scale = 1.0;
  /// Skip the random rotation, boost and translation (CM-frame output).
  bool rest_frame = false;
};

/// Radial-motion data in the CM frame for the requested invariant mass and |l|.
struct RadialProblem {
  double b;  // asymptotic Pi^2
  double k;  // r * (2 g / P.x), independent of chi
  double L;  // |l|
  double r_min;
  double r_max;  // +inf when unbound

  double pi_r_squared(double r) const { return b + k / r - L * L / (r * r); }
};

inline RadialProblem radial_problem(const SVConfig& cfg, double M, double L) {
  const double M2 = M * M;
  const double d = cfg.m1 - cfg.alpha * cfg.m2;
  RadialProblem rp{b_of_M(M2, cfg.m1, cfg.m2), cfg.kappa * (M2 - d * d) / M, L, 0.0, INFINITY};
  if (!(L > 0.0)) throw std::domain_error("sv2: |l| target must be positive");
  // pi_r^2 >= 0  <=>  L^2 u^2 - k u - b <= 0 in u = 1/r
  const double disc = rp.k * rp.k + 4.0 * rp.b * L * L;
  if (rp.b < 0.0) {
    if (!(disc > 0.0) || !(rp.k > 0.0))
      throw std::domain_error("sv2: no bound orbit for the requested mass and angular momentum");
    const double sq = std::sqrt(disc);
    rp.r_min = 2.0 * L * L / (rp.k + sq);
    rp.r_max = 2.0 * L * L / (rp.k - sq);
  } else if (rp.b > 0.0) {
    rp.r_min = 2.0 * L * L / (rp.k + std::sqrt(disc));
  } else {
    if (!(rp.k > 0.0)) throw std::domain_error("sv2: no orbit at the transition mass without attraction");
    rp.r_min = L * L / rp.k;
  }
  return rp;
}

/// Random admissible phase point: P of invariant mass M_target, x on the
/// light cone with x^0 = -chi |x| in the CM frame, |l| = ell_target and q
/// fixed by a bracketed root solve of phi = 0 for the radial momentum.
inline SVPhase init_state(const SVConfig& cfg, const InitRequest& req) {
  cfg.validate();
  if (!(req.M_target > 0.0)) throw ConfigError("sv2: M_target must be positive");
  const RadialProblem rp = radial_problem(cfg, req.M_target, req.ell_target);

  std::mt19937_64 rng(req.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double phase = 3.14159265358979323846 * unit(rng);
  double r;
  if (std::isfinite(rp.r_max)) {
    const double u_mid = 0.5 * (1.0 / rp.r_min + 1.0 / rp.r_max);
    const double u_amp = 0.5 * (1.0 / rp.r_min - 1.0 / rp.r_max);
    r = 1.0 / (u_mid + 0.9 * u_amp * std::cos(phase));
  } else {
    r = rp.r_min * (1.05 + 1.5 * std::fabs(std::sin(phase)));
  }
  const double radial_sign = unit(rng) < 0.0 ? -1.0 : 1.0;
  // rho = (P.q)/(P.x) is pure gauge; x^2 obeys (x^2)' = -2 lambda rho x^2, so
  // rho > 0 damps light-cone error along the flow.
  const double rho = 0.3 + 0.2 * unit(rng);

  const double M = req.M_target;
  const FourVector P{M, 0.0, 0.0, 0.0};
  const FourVector x{-cfg.chi * r, r, 0.0, 0.0};
  auto make = [&](double pi_r) {
    const FourVector Pi{0.0, pi_r, rp.L / r, 0.0};
    return SVPhase{FourVector{}, P, x, Pi + rho * x};
  };
  auto phi_of = [&](double pi_r) { return constraint_phi(make(pi_r), cfg); };

  double pi_r = 0.0;
  const double f0 = phi_of(0.0);
  if (f0 < 0.0) {
    const double guess = std::sqrt(std::fmax(rp.pi_r_squared(r), 0.0));
    double hi = 2.0 * guess + 1e-8;
    while (phi_of(hi) <= 0.0) {
      hi *= 2.0;
      if (hi > 1e8) throw NumericalError("sv2: init root solve could not bracket phi = 0");
    }
    std::uintmax_t iters = 200;
    const auto [lo_root, hi_root] = boost::math::tools::toms748_solve(
        phi_of, 0.0, hi, f0, phi_of(hi), boost::math::tools::eps_tolerance<double>(52), iters);
    if (iters >= 200) {
      std::ostringstream os;
      os << "sv2: init root solve did not converge in bracket [0, " << hi << "]";
      throw NumericalError(os.str());
    }
    pi_r = 0.5 * (lo_root + hi_root);
  }
  SVPhase p = make(radial_sign * pi_r);

  if (!req.rest_frame) {
    const Vec3 axis{unit(rng), unit(rng), unit(rng)};
    const double angle = 3.14159265358979323846 * unit(rng);
    Vec3 v{unit(rng), unit(rng), unit(rng)};
    v = (req.max_boost_speed * std::fabs(unit(rng)) / std::fmax(norm(v), 1e-12)) * v;
    const LorentzMatrix L = boost_matrix(v) * rotation_matrix(axis, angle);
    const FourVector z{req.event_scale * unit(rng), req.event_scale * unit(rng), req.event_scale * unit(rng),
                       req.event_scale * unit(rng)};
    p = {z, L(p.P), L(p.x), L(p.q)};
  }
  check_chi(p, cfg, 0.0);
  return p;
}

inline SVPhase transformed(const SVPhase& p, const LorentzMatrix& L) { return {L(p.z), L(p.P), L(p.x), L(p.q)}; }

// Phase-space views on the chart pairs[0] = (z, P), pairs[1] = (x, q).

inline CanonicalState to_chart(const SVPhase& p) {
  CanonicalState s;
  s.pairs.push_back({"common", p.z, p.P});
  s.pairs.push_back({"relative", p.x, p.q});
  return s;
}

inline SVPhase from_chart(const CanonicalState& s) {
  return {s.pairs.at(0).coordinate, s.pairs.at(0).momentum, s.pairs.at(1).coordinate, s.pairs.at(1).momentum};
}

inline Generators generators() {
  return {[](const CanonicalState& s) { return s.pairs.at(0).momentum; },
          [](const CanonicalState& s) { return total_angular_momentum(from_chart(s)); }};
}

inline Observable phi_observable(const SVConfig& cfg) {
  return [cfg](const CanonicalState& s) { return constraint_phi(from_chart(s), cfg); };
}

inline VectorObservable pi_observable() {
  return [](const CanonicalState& s) { return pi_internal(from_chart(s)); };
}

inline VectorObservable k_observable(const SVConfig& cfg) {
  return [cfg](const CanonicalState& s) { return lrl_vector(from_chart(s), cfg); };
}

inline VectorObservable q_observable(const SVConfig& cfg) {
  return [cfg](const CanonicalState& s) {
    const SVPhase p = from_chart(s);
    return shift_coefficient(-dot(p.P, p.P), cfg) * lrl_vector(p, cfg);
  };
}

/// Closed-form coefficient of l in {Q, Q}: -C^2 b.
inline double qq_coefficient(double M2, const SVConfig& cfg) {
  const double C = shift_coefficient(M2, cfg);
  return -C * C * b_of_M(M2, cfg.m1, cfg.m2);
}

}  // namespace relcm::sv
