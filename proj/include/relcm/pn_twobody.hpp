#pragma once

// Post-Newtonian two-body example in the CM frame: Newtonian Kepler-Coulomb
// flow driving the O(1/c^2) integration of the CM shift. The constant shift
// is proportional to the Newtonian Laplace-Runge-Lenz vector.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "relcm/errors.hpp"
#include "relcm/integrate.hpp"
#include "relcm/minkowski.hpp"
#include "relcm/vec3.hpp"

namespace relcm::pn {

struct PNConfig {
  double m1 = 1.0;
  double m2 = 1.0;
  double kappa = -1.0;  // e1 e2 (electric) or -G m1 m2 (gravitational)
  double c = 1.0;

  double M0() const { return m1 + m2; }
  double mu() const { return m1 * m2 / M0(); }
  /// (m1 - m2) / (2 M0^2 c^2)
  double shift_prefactor() const { return (m1 - m2) / (2.0 * M0() * M0() * c * c); }

  void validate() const {
    if (!(m1 > 0.0) || !(m2 > 0.0)) throw ConfigError("pn: masses must be positive");
    if (!(c > 0.0) || !std::isfinite(kappa)) throw ConfigError("pn: c must be positive and kappa finite");
  }
};

struct PNState {
  Vec3 r;
  Vec3 v;
  double t = 0.0;
};

inline double checked_radius(const PNState& s) {
  const double r = norm(s.r);
  if (!(r > 0.0)) throw NumericalError("pn: collision singularity r = 0", s.t);
  return r;
}

struct NewtonRate {
  Vec3 dr;
  Vec3 dv;
};

/// dr/dt = v, mu dv/dt = kappa r / r^3
inline NewtonRate newton_rhs(const PNState& s, const PNConfig& cfg) {
  const double r = checked_radius(s);
  return {s.v, (cfg.kappa / (cfg.mu() * r * r * r)) * s.r};
}

inline double energy(const PNState& s, const PNConfig& cfg) {
  return 0.5 * cfg.mu() * dot(s.v, s.v) + cfg.kappa / checked_radius(s);
}

inline Vec3 angular_momentum(const PNState& s, const PNConfig& cfg) { return cfg.mu() * cross(s.r, s.v); }

/// The bracketed rate (mu v^2 + kappa/r) v + kappa (v.r)/r^3 r, i.e. dK-type
/// terms without the mass prefactor.
inline Vec3 shift_rate_bracket(const PNState& s, const PNConfig& cfg) {
  const double r = checked_radius(s);
  const double w = cfg.mu() * dot(s.v, s.v) + cfg.kappa / r;
  return w * s.v + (cfg.kappa * dot(s.v, s.r) / (r * r * r)) * s.r;
}

inline Vec3 dR_dt(const PNState& s, const PNConfig& cfg) {
  return cfg.shift_prefactor() * shift_rate_bracket(s, cfg);
}

struct ClosedForms {
  Vec3 R1;
  Vec3 R2;
  Vec3 Q;
  Vec3 K;            // (mu v^2 + kappa/r) r - mu (v.r) v
  Vec3 K_alt;        // v x l + (kappa/r) r
};

inline ClosedForms closed_forms(const PNState& s, const PNConfig& cfg) {
  const double r = checked_radius(s);
  const double w = cfg.mu() * dot(s.v, s.v) + cfg.kappa / r;
  const double k = cfg.shift_prefactor();
  ClosedForms f;
  f.R1 = (k * w) * s.r;
  f.R2 = (k * cfg.mu() * dot(s.v, s.r)) * s.v;
  f.Q = f.R1 - f.R2;
  f.K = w * s.r - (cfg.mu() * dot(s.v, s.r)) * s.v;
  f.K_alt = cross(s.v, angular_momentum(s, cfg)) + (cfg.kappa / r) * s.r;
  return f;
}

inline StateVector pack(const PNState& s) {
  return {s.r[0], s.r[1], s.r[2], s.v[0], s.v[1], s.v[2]};
}

inline PNState unpack(std::span<const double> y, double t) {
  return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, t};
}

inline RhsFunction flow_rhs(const PNConfig& cfg) {
  return [cfg](double t, std::span<const double> y, std::span<double> dy) {
    const auto rate = newton_rhs(unpack(y, t), cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      dy[i] = rate.dr[i];
      dy[3 + i] = rate.dv[i];
    }
  };
}

/// Kepler orbit elements for initial data at perihelion along +x.
/// kappa < 0 gives an attractive orbit; e < 1 bound, e >= 1 unbound.
inline PNState perihelion_state(const PNConfig& cfg, double r_peri, double e) {
  if (!(cfg.kappa < 0.0)) throw ConfigError("pn: Kepler orbits need an attractive coupling");
  if (!(r_peri > 0.0) || !(e >= 0.0)) throw ConfigError("pn: invalid orbit elements");
  // At perihelion: mu v^2 = -kappa (1 + e) / r_p
  const double v = std::sqrt(-cfg.kappa * (1.0 + e) / (cfg.mu() * r_peri));
  return {{r_peri, 0.0, 0.0}, {0.0, v, 0.0}, 0.0};
}

/// Period of a bound orbit, 2 pi sqrt(mu a^3 / |kappa|).
inline double kepler_period(const PNState& s, const PNConfig& cfg) {
  const double E = energy(s, cfg);
  if (!(E < 0.0)) throw std::domain_error("pn: orbit is not bound");
  const double a = cfg.kappa / (2.0 * E);
  return 2.0 * 3.14159265358979323846 * std::sqrt(cfg.mu() * a * a * a / std::fabs(cfg.kappa));
}

/// Perihelion passages of a sampled trajectory, refined by golden section on r.
inline std::vector<RefinedExtremum> perihelia(const PNConfig& cfg, const Trajectory& traj) {
  return refine_minima(flow_rhs(cfg), traj, [](const StateVector& y) {
    return std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
  });
}

/// Covariant lift of the CM-frame shift: internal 4-vectors r_perp, v_perp
/// orthogonal to P = (M0, 0). K is rebuilt from invariants so that it can be
/// evaluated in any frame.
struct CovariantLift {
  FourVector P;
  FourVector r;
  FourVector v;
};

inline CovariantLift lift(const PNState& s, const PNConfig& cfg) {
  return {{cfg.M0(), 0.0, 0.0, 0.0}, FourVector(0.0, s.r), FourVector(0.0, s.v)};
}

inline CovariantLift transformed(const CovariantLift& l, const LorentzMatrix& L) {
  return {L(l.P), L(l.r), L(l.v)};
}

inline FourVector covariant_K(const CovariantLift& l, const PNConfig& cfg) {
  const Projector D(l.P);
  const FourVector r = D.apply(l.r);
  const FourVector v = D.apply(l.v);
  const double rr = std::sqrt(dot(r, r));
  if (!(rr > 0.0)) throw NumericalError("pn: collision singularity r = 0");
  const double w = cfg.mu() * dot(v, v) + cfg.kappa / rr;
  return w * r - (cfg.mu() * dot(v, r)) * v;
}

inline FourVector covariant_Q(const CovariantLift& l, const PNConfig& cfg) {
  return cfg.shift_prefactor() * covariant_K(l, cfg);
}

}  // namespace relcm::pn
