#pragma once

// Global/internal decomposition of a composite system's generators:
// centre-of-inertia, spatial internal angular momentum, shift vector and the
// centre-of-mass worldline, plus the bookkeeping used to validate closed-form
// solutions of the centre-of-mass integration equation.

#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relcm/minkowski.hpp"

namespace relcm {

/// Total linear momentum P and total angular momentum J about the origin.
struct GlobalState {
  FourVector P;
  AntisymTensor2 J;
};

struct InternalDecomposition {
  double M = 0.0;
  FourVector U;          // P / M
  FourVector X_I;        // centre-of-inertia
  AntisymTensor2 ell_t;  // spatial internal angular momentum
  FourVector ell_v;      // its dual vector
  FourVector Q;          // shift vector
  FourVector X_o;        // spatial CM coordinate, X_o . P = 0
  AntisymTensor2 j;      // internal angular momentum about the CM
};

/// Straight CM worldline X_o + tau P / M.
struct CentroidLine {
  FourVector base;
  FourVector direction;

  FourVector at(double tau) const { return base + tau * direction; }
};

/// X_I^mu = -J^{mu nu} P_nu / M^2
inline FourVector center_of_inertia(const GlobalState& g) {
  const double m2 = -dot(g.P, g.P);
  if (!(m2 > 0.0)) throw std::domain_error("non-timelike total momentum");
  return contract(g.J, g.P) * (-1.0 / m2);
}

/// l^{mu nu} = Delta^mu_lambda Delta^nu_rho J^{lambda rho}
inline AntisymTensor2 spatial_internal_ell(const GlobalState& g) {
  return Projector(g.P).apply(g.J);
}

/// Q^mu = j^{mu nu} P_nu / M^2
inline FourVector shift_from_internal(const AntisymTensor2& j, const FourVector& P) {
  const double m2 = -dot(P, P);
  if (!(m2 > 0.0)) throw std::domain_error("non-timelike total momentum");
  return contract(j, P) * (1.0 / m2);
}

/// X_o = X_I + Q for an internal shift vector Q.
inline FourVector cm_from_shift(const GlobalState& g, const FourVector& Q) {
  const double M = invariant_mass(g.P);
  if (std::fabs(dot(Q, g.P)) > 1e-10 * M * std::fmax(1.0, max_abs(Q)))
    throw std::domain_error("shift vector is not orthogonal to the total momentum");
  return center_of_inertia(g) + Q;
}

/// Internal angular momentum rebuilt from its rotational part and the shift:
/// j = l - Q P + P Q.
inline AntisymTensor2 internal_from_parts(const AntisymTensor2& ell, const FourVector& Q,
                                          const FourVector& P) {
  return ell - wedge(Q, P);
}

inline InternalDecomposition decompose(const GlobalState& g, const FourVector& Q) {
  InternalDecomposition d;
  d.M = invariant_mass(g.P);
  d.U = g.P / d.M;
  d.X_I = center_of_inertia(g);
  d.ell_t = spatial_internal_ell(g);
  d.ell_v = dualize(d.ell_t, d.U);
  d.Q = Q;
  d.X_o = cm_from_shift(g, Q);
  d.j = internal_from_parts(d.ell_t, Q, g.P);
  return d;
}

inline CentroidLine inertia_centroid(const GlobalState& g) {
  return {center_of_inertia(g), g.P / invariant_mass(g.P)};
}

inline CentroidLine shifted_centroid(const GlobalState& g, const FourVector& Q) {
  return {cm_from_shift(g, Q), g.P / invariant_mass(g.P)};
}

/// Uniform translation x -> x + a seen by any CM candidate:
/// X_o -> X_o + a + (P.a / M^2) P.
inline FourVector translate_cm(const FourVector& X_o, const FourVector& a, const FourVector& P) {
  return X_o + Projector(P).apply(a);
}

struct WeightedEvent {
  double mass;
  FourVector x;
};

/// X_N = sum m_a x_a / sum m_a
inline FourVector newtonian_cm(std::span<const WeightedEvent> points) {
  if (points.empty()) throw std::invalid_argument("newtonian_cm: empty particle list");
  FourVector s;
  double m0 = 0.0;
  for (const auto& p : points) {
    if (!(p.mass > 0.0)) throw std::invalid_argument("newtonian_cm: masses must be positive");
    s += p.mass * p.x;
    m0 += p.mass;
  }
  return s / m0;
}

/// A system exposing its total momentum and the evolution-parameter rate of
/// its Newtonian CM at a given state.
template <class Model>
concept CmIntegrationModel = requires(const Model& m, const typename Model::State& s) {
  { m.total_momentum(s) } -> std::convertible_to<FourVector>;
  { m.newtonian_cm_rate(s) } -> std::convertible_to<FourVector>;
};

/// Delta . dX_N/dsigma - dR/dsigma. Vanishes when R_rate is the rate of a
/// solution of the CM integration equation.
template <CmIntegrationModel Model>
FourVector cm_integration_residual(const Model& model, const typename Model::State& s,
                                   const FourVector& R_rate) {
  const Projector delta(model.total_momentum(s));
  return delta.apply(model.newtonian_cm_rate(s)) - R_rate;
}

}  // namespace relcm
