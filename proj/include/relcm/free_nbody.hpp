#pragma once

// Free relativistic N-body system on straight worldlines: the G-vector Gram
// solve, the two structural solutions R1, R2 of the CM integration equation
// and the shift vector Q = G_nu l^{mu nu} / M0.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "relcm/errors.hpp"
#include "relcm/minkowski.hpp"
#include "relcm/observables.hpp"
#include "relcm/poisson.hpp"

namespace relcm::free_nbody {

struct FreeParticle {
  double m = 1.0;
  FourVector x0;  // any event on the worldline
  FourVector u;   // unit future-pointing 4-velocity
};

/// Evolution gauge. LabTime: common coordinate time x_a^0 = sigma.
/// ProperTime: each particle advances along u_a by sigma (x_a = x0_a + sigma u_a).
enum class Gauge { LabTime, ProperTime };

class FreeSystem {
 public:
  explicit FreeSystem(std::vector<FreeParticle> particles) : particles_(std::move(particles)) {
    if (particles_.empty()) throw std::invalid_argument("free system needs at least one particle");
    for (const auto& p : particles_) {
      if (!(p.m > 0.0)) throw std::invalid_argument("particle masses must be positive");
      if (std::fabs(dot(p.u, p.u) + 1.0) > 1e-12 || !(p.u[0] > 0.0))
        throw std::invalid_argument("particle 4-velocity must be unit future timelike");
      P_ += p.m * p.u;
      J_ += wedge(p.x0, p.m * p.u);
      M0_ += p.m;
    }
    M_ = invariant_mass(P_);
  }

  const std::vector<FreeParticle>& particles() const { return particles_; }
  std::size_t size() const { return particles_.size(); }
  const FourVector& P() const { return P_; }
  const AntisymTensor2& J() const { return J_; }
  GlobalState global() const { return {P_, J_}; }
  double M() const { return M_; }
  double M0() const { return M0_; }
  FourVector U() const { return P_ / M_; }
  FourVector momentum(std::size_t a) const { return particles_[a].m * particles_[a].u; }

 private:
  std::vector<FreeParticle> particles_;
  FourVector P_;
  AntisymTensor2 J_;
  double M_ = 0.0;
  double M0_ = 0.0;
};

/// Inverse generalized Lorentz factor d tau_a / d sigma.
inline double inverse_gamma(const FreeParticle& p, Gauge gauge) {
  return gauge == Gauge::LabTime ? 1.0 / p.u[0] : 1.0;
}

/// Particle events at evolution parameter sigma.
inline std::vector<FourVector> evolve(const FreeSystem& sys, double sigma, Gauge gauge = Gauge::LabTime) {
  std::vector<FourVector> x;
  x.reserve(sys.size());
  for (const auto& p : sys.particles()) {
    const double advance = gauge == Gauge::LabTime ? (sigma - p.x0[0]) / p.u[0] : sigma;
    x.push_back(p.x0 + advance * p.u);
  }
  return x;
}

/// dx_a / dsigma = gamma_a^{-1} u_a
inline std::vector<FourVector> velocities(const FreeSystem& sys, Gauge gauge = Gauge::LabTime) {
  std::vector<FourVector> v;
  for (const auto& p : sys.particles()) v.push_back(inverse_gamma(p, gauge) * p.u);
  return v;
}

struct SpatialParts {
  std::vector<FourVector> xi;  // Delta x_a
  std::vector<FourVector> q;   // Delta p_a
  std::vector<double> E;       // -p_a . U
};

inline SpatialParts spatial_parts(const FreeSystem& sys, double sigma, Gauge gauge = Gauge::LabTime) {
  const Projector D(sys.P());
  const FourVector U = sys.U();
  const auto x = evolve(sys, sigma, gauge);
  SpatialParts out;
  for (std::size_t a = 0; a < sys.size(); ++a) {
    const FourVector p = sys.momentum(a);
    out.xi.push_back(D.apply(x[a]));
    out.q.push_back(D.apply(p));
    out.E.push_back(-dot(p, U));
  }
  return out;
}

struct GVector {
  FourVector G;
  FourVector G_perp;  // part orthogonal to P
  std::vector<double> alphas;
  double condition_number = 0.0;
};

/// Solves sum_b (u_a . u_b) alpha_b = 1 for all a and returns
/// G = sum alpha_a u_a. Throws when the Gram matrix is singular or
/// ill-conditioned (condition number >= 1e12).
inline GVector solve_gram(const std::vector<FourVector>& u, const FourVector& P) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) gram(a, b) = dot(u[a], u[b]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : INFINITY;
  if (!(cond < 1e12)) throw NumericalError("degenerate velocity configuration");
  const Eigen::VectorXd alpha = svd.solve(Eigen::VectorXd::Ones(n));

  GVector out;
  out.condition_number = cond;
  for (Eigen::Index a = 0; a < n; ++a) {
    out.alphas.push_back(alpha(a));
    out.G += alpha(a) * u[a];
  }
  out.G_perp = Projector(P).apply(out.G);
  return out;
}

inline GVector solve_G(const FreeSystem& sys) {
  std::vector<FourVector> u;
  for (const auto& p : sys.particles()) u.push_back(p.u);
  return solve_gram(u, sys.P());
}

/// Two-body closed form G_perp = 2 (m1 - m2) q / (M^2 - (m1 - m2)^2), q = q_1.
inline FourVector g_perp_two_body(const FreeSystem& sys) {
  if (sys.size() != 2) throw std::invalid_argument("two-body closed form needs N = 2");
  const double dm = sys.particles()[0].m - sys.particles()[1].m;
  const double den = sys.M() * sys.M() - dm * dm;
  if (std::fabs(den) < 1e-14 * sys.M() * sys.M()) throw NumericalError("degenerate 2-body kinematics");
  const FourVector q = Projector(sys.P()).apply(sys.momentum(0));
  return (2.0 * dm / den) * q;
}

inline AntisymTensor2 internal_ell(const FreeSystem& sys) { return spatial_internal_ell(sys.global()); }

/// Q = G_nu l^{mu nu} / M0
inline FourVector shift_vector(const FreeSystem& sys, const GVector& G) {
  return contract(internal_ell(sys), G.G) / sys.M0();
}

inline FourVector shift_vector(const FreeSystem& sys) { return shift_vector(sys, solve_G(sys)); }

struct ShiftSolutions {
  FourVector R1;
  FourVector R2;
  FourVector Q;  // R1 - R2
};

/// Trivial (coordinate-like) and non-trivial (momentum-like) solutions of
/// the CM integration equation at sigma.
inline ShiftSolutions r1_r2_Q(const FreeSystem& sys, const GVector& G, double sigma,
                              Gauge gauge = Gauge::LabTime) {
  const auto parts = spatial_parts(sys, sigma, gauge);
  const auto x = evolve(sys, sigma, gauge);
  const double M2 = sys.M() * sys.M();
  ShiftSolutions s;
  for (std::size_t a = 0; a < sys.size(); ++a) {
    const double m = sys.particles()[a].m;
    const double time_like = dot(x[a], sys.P()) / M2;
    s.R1 += (m / sys.M0() - parts.E[a] / sys.M()) * parts.xi[a] - time_like * parts.q[a];
    s.R2 += (dot(G.G_perp, parts.xi[a]) / sys.M0()) * parts.q[a] - time_like * parts.q[a];
  }
  s.Q = s.R1 - s.R2;
  return s;
}

inline ShiftSolutions r1_r2_Q(const FreeSystem& sys, double sigma, Gauge gauge = Gauge::LabTime) {
  return r1_r2_Q(sys, solve_G(sys), sigma, gauge);
}

struct QQClosedForm {
  double coefficient = 0.0;  // c in {Q^mu, Q^nu} = c l^{mu nu}, c = -G_perp^2 / M0^2
  double q_squared = 0.0;    // [G_perp^2 l^2 - (G.l)^2] / M0^2
};

inline QQClosedForm qq_bracket_closed_form(const FreeSystem& sys, const GVector& G) {
  const double M0sq = sys.M0() * sys.M0();
  const FourVector ell_v = dualize(internal_ell(sys), sys.U());
  const double gp2 = dot(G.G_perp, G.G_perp);
  const double gl = dot(G.G, ell_v);
  return {-gp2 / M0sq, (gp2 * dot(ell_v, ell_v) - gl * gl) / M0sq};
}

inline QQClosedForm qq_bracket_closed_form(const FreeSystem& sys) {
  return qq_bracket_closed_form(sys, solve_G(sys));
}

/// The system viewed as a CM-integration model; state is the evolution parameter.
struct CmModel {
  using State = double;
  const FreeSystem* sys;
  Gauge gauge = Gauge::LabTime;

  FourVector total_momentum(double) const { return sys->P(); }
  FourVector newtonian_cm_rate(double) const {
    FourVector r;
    const auto v = velocities(*sys, gauge);
    for (std::size_t a = 0; a < sys->size(); ++a) r += sys->particles()[a].m * v[a];
    return r / sys->M0();
  }
};

/// sum_a gamma_a^{-1} q_a / M0, the rate both R1 and R2 must reproduce.
inline FourVector projected_cm_rate(const FreeSystem& sys, Gauge gauge = Gauge::LabTime) {
  const Projector D(sys.P());
  FourVector r;
  for (std::size_t a = 0; a < sys.size(); ++a)
    r += inverse_gamma(sys.particles()[a], gauge) * D.apply(sys.momentum(a));
  return r / sys.M0();
}

inline FreeSystem transformed(const FreeSystem& sys, const LorentzMatrix& L) {
  std::vector<FreeParticle> ps;
  for (const auto& p : sys.particles()) ps.push_back({p.m, L(p.x0), L(p.u)});
  return FreeSystem(std::move(ps));
}

inline FreeSystem translated(const FreeSystem& sys, const FourVector& a) {
  std::vector<FreeParticle> ps;
  for (const auto& p : sys.particles()) ps.push_back({p.m, p.x0 + a, p.u});
  return FreeSystem(std::move(ps));
}

struct RandomSystemOptions {
  std::size_t n = 3;
  double mass_lo = 0.5;
  double mass_hi = 2.0;
  bool equal_masses = false;
  double momentum_scale = 1.0;
  double event_scale = 2.0;
  double max_boost_speed = 0.5;
};

/// Masses uniform in [mass_lo, mass_hi]; CM-frame momenta sampled and
/// re-centred so that sum q_a = 0; energies rebuilt on shell; then a random
/// rotation and boost take the system out of its rest frame.
template <class Rng>
FreeSystem random_system(const RandomSystemOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> mass(opt.mass_lo, opt.mass_hi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> m(opt.n);
  const double common = mass(rng);
  for (auto& mi : m) mi = opt.equal_masses ? common : mass(rng);
  std::vector<Vec3> q(opt.n);
  Vec3 mean;
  for (auto& qi : q) {
    qi = opt.momentum_scale * Vec3{unit(rng), unit(rng), unit(rng)};
    mean += qi;
  }
  mean = mean / static_cast<double>(opt.n);
  for (auto& qi : q) qi -= mean;
  if (opt.n == 1) q[0] = Vec3{};

  const Vec3 axis{unit(rng), unit(rng), unit(rng)};
  const double angle = 3.14159265358979 * unit(rng);
  Vec3 v{unit(rng), unit(rng), unit(rng)};
  v = (opt.max_boost_speed * std::fabs(unit(rng)) / std::fmax(norm(v), 1e-12)) * v;
  const LorentzMatrix L = boost_matrix(v) * rotation_matrix(axis, angle);

  std::vector<FreeParticle> ps;
  for (std::size_t a = 0; a < opt.n; ++a) {
    const double E = std::sqrt(m[a] * m[a] + dot(q[a], q[a]));
    FourVector u = FourVector(E, q[a]) / m[a];
    u = L(u);
    u[0] = std::sqrt(1.0 + u[1] * u[1] + u[2] * u[2] + u[3] * u[3]);
    const FourVector x0 = opt.event_scale * FourVector(unit(rng), unit(rng), unit(rng), unit(rng));
    ps.push_back({m[a], x0, u});
  }
  return FreeSystem(std::move(ps));
}

/// Canonical chart (x_a(sigma), p_a) of the system.
inline CanonicalState to_chart(const FreeSystem& sys, double sigma, Gauge gauge = Gauge::LabTime) {
  const auto x = evolve(sys, sigma, gauge);
  CanonicalState s;
  for (std::size_t a = 0; a < sys.size(); ++a)
    s.pairs.push_back({"particle" + std::to_string(a + 1), x[a], sys.momentum(a)});
  return s;
}

/// Q as a phase-space function on the particle chart; masses are read off
/// the momenta as sqrt(-p_a^2).
inline VectorObservable shift_vector_observable() {
  return [](const CanonicalState& s) {
    std::vector<FourVector> u;
    FourVector P;
    AntisymTensor2 J;
    double M0 = 0.0;
    for (const auto& pr : s.pairs) {
      const double m = std::sqrt(-dot(pr.momentum, pr.momentum));
      u.push_back(pr.momentum / m);
      P += pr.momentum;
      J += wedge(pr.coordinate, pr.momentum);
      M0 += m;
    }
    const GVector G = solve_gram(u, P);
    return contract(spatial_internal_ell({P, J}), G.G) / M0;
  };
}

}  // namespace relcm::free_nbody
