#pragma once

// Relativistic particle with position-dependent mass in a fixed-centre
// Coulomb field, H = sqrt(p^2 + m^2 + kappa'^2 / r^2) + kappa / r with
// kappa' = +-kappa. Orbits are fixed conics and K is conserved.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relcm/errors.hpp"
#include "relcm/integrate.hpp"
#include "relcm/vec3.hpp"

namespace relcm::coulomb {

struct CSConfig {
  double m = 1.0;
  double kappa = -0.3;
  int sign = 1;  // kappa' = sign * kappa

  double kappa_prime() const { return sign * kappa; }

  void validate() const {
    if (!(m > 0.0)) throw ConfigError("coulomb-scalar: mass must be positive");
    if (sign != 1 && sign != -1) throw ConfigError("coulomb-scalar: sign must be +1 or -1");
    if (!std::isfinite(kappa)) throw ConfigError("coulomb-scalar: kappa must be finite");
  }
};

struct CSState {
  Vec3 r;
  Vec3 p;
};

inline double checked_radius(const CSState& s) {
  const double r = norm(s.r);
  if (!(r > 0.0)) throw NumericalError("coulomb-scalar: singularity at r = 0");
  return r;
}

/// sqrt(p^2 + m^2 + kappa'^2 / r^2)
inline double kinetic_root(const CSState& s, const CSConfig& cfg) {
  const double r = checked_radius(s);
  const double kp = cfg.kappa_prime();
  return std::sqrt(dot(s.p, s.p) + cfg.m * cfg.m + kp * kp / (r * r));
}

inline double hamiltonian(const CSState& s, const CSConfig& cfg) {
  return kinetic_root(s, cfg) + cfg.kappa / checked_radius(s);
}

struct HamiltonRate {
  Vec3 dr;
  Vec3 dp;
};

inline HamiltonRate hamilton_rhs(const CSState& s, const CSConfig& cfg) {
  const double r = checked_radius(s);
  const double W = kinetic_root(s, cfg);
  const double kp = cfg.kappa_prime();
  const Vec3 dH_dr = (-kp * kp / (r * r * r * r * W) - cfg.kappa / (r * r * r)) * s.r;
  return {s.p / W, -dH_dr};
}

inline Vec3 angular_momentum(const CSState& s) { return cross(s.r, s.p); }

/// K = l x p - (kappa E / r) r, E = H(s)
inline Vec3 lrl_vector(const CSState& s, const CSConfig& cfg) {
  const double r = checked_radius(s);
  const double E = hamiltonian(s, cfg);
  return cross(angular_momentum(s), s.p) - (cfg.kappa * E / r) * s.r;
}

/// (E^2 - m^2) l^2 + E^2 kappa^2
inline double lrl_magnitude_squared(double E, double ell, const CSConfig& cfg) {
  return (E * E - cfg.m * cfg.m) * ell * ell + E * E * cfg.kappa * cfg.kappa;
}

/// E^2 - m^2 - 2 kappa E / r - (kappa'^2 - kappa^2) / r^2
inline double momentum_squared_from_energy(double E, double r, const CSConfig& cfg) {
  const double kp = cfg.kappa_prime();
  return E * E - cfg.m * cfg.m - 2.0 * cfg.kappa * E / r - (kp * kp - cfg.kappa * cfg.kappa) / (r * r);
}

inline StateVector pack(const CSState& s) { return {s.r[0], s.r[1], s.r[2], s.p[0], s.p[1], s.p[2]}; }

inline CSState unpack(std::span<const double> y) { return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}}; }

inline RhsFunction flow_rhs(const CSConfig& cfg) {
  return [cfg](double t, std::span<const double> y, std::span<double> dy) {
    try {
      const auto rate = hamilton_rhs(unpack(y), cfg);
      for (std::size_t i = 0; i < 3; ++i) {
        dy[i] = rate.dr[i];
        dy[3 + i] = rate.dp[i];
      }
    } catch (const NumericalError&) {
      throw NumericalError("coulomb-scalar: singularity at r = 0", t);
    }
  };
}

/// Polar angle of r measured from -K, the direction of closest approach.
inline double orbit_angle(const Vec3& r, const Vec3& K) { return angle_between(r, -K); }

/// max |1/r + kappa E / l^2 - (|K| / l^2) cos(theta)| over the samples, with
/// E, l and K taken from the first sample.
inline double orbit_residual(const std::vector<CSState>& samples, const CSConfig& cfg) {
  if (samples.empty()) return 0.0;
  const double E = hamiltonian(samples.front(), cfg);
  const double ell = norm(angular_momentum(samples.front()));
  if (!(ell > 0.0)) throw std::domain_error("orbit equation undefined");
  const Vec3 K = lrl_vector(samples.front(), cfg);
  const double A = std::sqrt(lrl_magnitude_squared(E, ell, cfg));
  const double l2 = ell * ell;
  double worst = 0.0;
  for (const auto& s : samples) {
    const double r = checked_radius(s);
    const double theta = orbit_angle(s.r, K);
    worst = std::fmax(worst, std::fabs(1.0 / r + cfg.kappa * E / l2 - (A / l2) * std::cos(theta)));
  }
  return worst;
}

inline std::vector<CSState> states_of(const Trajectory& traj) {
  std::vector<CSState> out;
  out.reserve(traj.size());
  for (const auto& y : traj.states) out.push_back(unpack(y));
  return out;
}

/// Planar initial data at distance r0 on +x with momentum (p_r, p_t, 0).
inline CSState planar_state(double r0, double p_r, double p_t) { return {{r0, 0.0, 0.0}, {p_r, p_t, 0.0}}; }

inline std::vector<RefinedExtremum> perihelia(const CSConfig& cfg, const Trajectory& traj) {
  return refine_minima(flow_rhs(cfg), traj, [](const StateVector& y) {
    return std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
  });
}

/// Axis alignment of K with r: angle between the lines they span, in [0, pi/2].
inline double line_angle(const Vec3& a, const Vec3& b) {
  const double t = angle_between(a, b);
  return std::fmin(t, 3.14159265358979323846 - t);
}

}  // namespace relcm::coulomb
