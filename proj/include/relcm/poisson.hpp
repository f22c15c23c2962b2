#pragma once

// Numerical Poisson brackets over canonical charts of 4-vector pairs with
// {x_a^mu, p_b^nu} = g^{mu nu} delta_ab, and the bracket identities that the
// Lorentz-Poincare algebra implies for internal observables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "relcm/errors.hpp"
#include "relcm/minkowski.hpp"
#include "relcm/observables.hpp"

namespace relcm {

struct CanonicalPair {
  std::string name;
  FourVector coordinate;
  FourVector momentum;
};

/// Phase-space point: an ordered list of conjugate (coordinate, momentum)
/// pairs. Flat index 8a + mu addresses x_a^mu, 8a + 4 + mu addresses p_a^mu.
struct CanonicalState {
  std::vector<CanonicalPair> pairs;

  std::size_t dimension() const { return 8 * pairs.size(); }

  double get(std::size_t i) const {
    const auto& p = pairs[i / 8];
    const std::size_t k = i % 8;
    return k < 4 ? p.coordinate[k] : p.momentum[k - 4];
  }
  void set(std::size_t i, double v) {
    auto& p = pairs[i / 8];
    const std::size_t k = i % 8;
    (k < 4 ? p.coordinate[k] : p.momentum[k - 4]) = v;
  }
};

using Observable = std::function<double(const CanonicalState&)>;
using ObservableFamily = std::function<std::vector<double>(const CanonicalState&)>;
using VectorObservable = std::function<FourVector(const CanonicalState&)>;
using TensorObservable = std::function<AntisymTensor2(const CanonicalState&)>;

/// Largest relative step of the central-difference ladder; each coordinate is
/// perturbed by step * max(1, |value|) / 2^k for k = 0 .. kBracketStepLevels.
inline constexpr double kDefaultBracketStep = 1e-2;
inline constexpr int kBracketStepLevels = 6;

inline ObservableFamily family_of(Observable f) {
  return [f = std::move(f)](const CanonicalState& s) { return std::vector<double>{f(s)}; };
}

inline ObservableFamily family_of(VectorObservable f) {
  return [f = std::move(f)](const CanonicalState& s) {
    const FourVector v = f(s);
    return std::vector<double>(v.c.begin(), v.c.end());
  };
}

/// All 16 components T^{mu nu}, row-major.
inline ObservableFamily family_of(TensorObservable f) {
  return [f = std::move(f)](const CanonicalState& s) {
    const AntisymTensor2 t = f(s);
    std::vector<double> out(16);
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) out[4 * a + b] = t(a, b);
    return out;
  };
}

/// Jacobian of an observable family: rows index components, columns index
/// phase-space coordinates.
struct Jacobian {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

namespace detail {

inline std::vector<double> checked_eval(const ObservableFamily& f, const CanonicalState& s) {
  std::vector<double> v = f(s);
  for (double x : v)
    if (!std::isfinite(x)) throw NumericalError("singular observable evaluation");
  return v;
}

/// Fourth-order central difference of f along coordinate i with step h.
inline std::vector<double> central_difference(const ObservableFamily& f, CanonicalState& s,
                                              std::size_t i, double h) {
  const double x0 = s.get(i);
  auto at = [&](double dx) {
    s.set(i, x0 + dx);
    return checked_eval(f, s);
  };
  const auto p1 = at(h), m1 = at(-h), p2 = at(2.0 * h), m2 = at(-2.0 * h);
  s.set(i, x0);
  std::vector<double> d(p1.size());
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * h);
  return d;
}

}  // namespace detail

/// Fourth-order central differences with one Richardson level (steps h and
/// h/2), giving sixth-order accuracy on smooth observables. The step is
/// chosen per coordinate from a halving ladder: the Richardson estimates of
/// neighbouring levels are compared and the finer estimate of the closest
/// pair is kept, which balances truncation against round-off. Levels whose
/// stencil meets a singular evaluation are skipped.
inline Jacobian gradient(const ObservableFamily& f, const CanonicalState& s,
                         double step = kDefaultBracketStep) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient: step must be positive");
  CanonicalState work = s;
  const std::size_t rows = detail::checked_eval(f, s).size();
  Jacobian J{rows, s.dimension(), std::vector<double>(rows * s.dimension())};
  std::vector<std::optional<std::vector<double>>> diffs(kBracketStepLevels + 2);
  std::vector<std::optional<std::vector<double>>> estimates(kBracketStepLevels + 1);
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const double h0 = step * std::fmax(1.0, std::fabs(s.get(i)));
    std::optional<NumericalError> failure;
    for (std::size_t k = 0; k < diffs.size(); ++k) {
      try {
        diffs[k] = detail::central_difference(f, work, i, std::ldexp(h0, -int(k)));
      } catch (const NumericalError& e) {
        work.set(i, s.get(i));
        diffs[k].reset();
        failure = e;
      }
    }
    for (std::size_t k = 0; k < estimates.size(); ++k) {
      estimates[k].reset();
      if (!diffs[k] || !diffs[k + 1]) continue;
      std::vector<double> d(rows);
      for (std::size_t r = 0; r < rows; ++r) d[r] = (16.0 * (*diffs[k + 1])[r] - (*diffs[k])[r]) / 15.0;
      estimates[k] = std::move(d);
    }
    const std::vector<double>* best = nullptr;
    double best_err = INFINITY;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
      if (!estimates[k]) continue;
      if (!best) best = &*estimates[k];
      if (k + 1 == estimates.size() || !estimates[k + 1]) continue;
      double err = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double a = (*estimates[k])[r], b = (*estimates[k + 1])[r];
        err = std::fmax(err, std::fabs(a - b) / std::fmax(1.0, std::fabs(b)));
      }
      if (err < best_err) {
        best_err = err;
        best = &*estimates[k + 1];
      }
    }
    if (!best) throw failure ? *failure : NumericalError("singular observable evaluation");
    for (std::size_t r = 0; r < rows; ++r) J(r, i) = (*best)[r];
  }
  return J;
}

/// Matrix of brackets {A_r, B_c} assembled from two Jacobians.
inline std::vector<std::vector<double>> bracket_matrix(const Jacobian& A, const Jacobian& B) {
  if (A.cols != B.cols) throw std::invalid_argument("bracket_matrix: chart mismatch");
  std::vector<std::vector<double>> out(A.rows, std::vector<double>(B.rows, 0.0));
  const std::size_t npairs = A.cols / 8;
  for (std::size_t r = 0; r < A.rows; ++r)
    for (std::size_t c = 0; c < B.rows; ++c) {
      double s = 0.0;
      for (std::size_t a = 0; a < npairs; ++a)
        for (std::size_t mu = 0; mu < 4; ++mu) {
          const std::size_t xi = 8 * a + mu, pi = 8 * a + 4 + mu;
          s += kMetric[mu] * (A(r, xi) * B(c, pi) - A(r, pi) * B(c, xi));
        }
      out[r][c] = s;
    }
  return out;
}

inline std::vector<std::vector<double>> brackets(const ObservableFamily& A, const ObservableFamily& B,
                                                 const CanonicalState& s,
                                                 double step = kDefaultBracketStep) {
  return bracket_matrix(gradient(A, s, step), gradient(B, s, step));
}

/// {A, B}(s) for scalar observables.
inline double bracket(const Observable& A, const Observable& B, const CanonicalState& s,
                      double step = kDefaultBracketStep) {
  return brackets(family_of(A), family_of(B), s, step)[0][0];
}

/// Generators of the Poincare group as functions on a chart.
struct Generators {
  VectorObservable P;
  TensorObservable J;
};

/// Chart of free particles: P = sum p_a, J = sum x_a ^ p_a.
inline Generators particle_generators() {
  return {[](const CanonicalState& s) {
            FourVector P;
            for (const auto& p : s.pairs) P += p.momentum;
            return P;
          },
          [](const CanonicalState& s) {
            AntisymTensor2 J;
            for (const auto& p : s.pairs) J += wedge(p.coordinate, p.momentum);
            return J;
          }};
}

inline TensorObservable internal_ell_tensor(const Generators& g) {
  return [g](const CanonicalState& s) { return spatial_internal_ell({g.P(s), g.J(s)}); };
}

inline VectorObservable internal_ell_vector(const Generators& g) {
  return [g](const CanonicalState& s) {
    const FourVector P = g.P(s);
    return dualize(spatial_internal_ell({P, g.J(s)}), P / invariant_mass(P));
  };
}

/// Max |computed - expected| normalized by max(1, |expected|_max).
struct ResidualAccumulator {
  double max_diff = 0.0;
  double max_ref = 0.0;
  std::size_t count = 0;

  void add(double computed, double expected) {
    max_diff = std::fmax(max_diff, std::fabs(computed - expected));
    max_ref = std::fmax(max_ref, std::fabs(expected));
    ++count;
  }
  double residual() const { return max_diff / std::fmax(1.0, max_ref); }
};

struct BracketCheck {
  std::string name;
  double residual = 0.0;
  std::size_t identities = 0;
};

/// All 100 ordered brackets among the ten generators {P^mu, J^{mu nu}}
/// compared against the Lorentz-Poincare algebra.
inline BracketCheck verify_poincare_algebra(const CanonicalState& s, const Generators& g,
                                            double step = kDefaultBracketStep) {
  // Generator index: 0..3 -> P^mu, 4..9 -> J^{mu nu} with mu < nu.
  static constexpr std::array<std::array<std::size_t, 2>, 6> kPairs{
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  const ObservableFamily gens = [g](const CanonicalState& st) {
    const FourVector P = g.P(st);
    const AntisymTensor2 J = g.J(st);
    std::vector<double> out(P.c.begin(), P.c.end());
    for (auto [a, b] : kPairs) out.push_back(J(a, b));
    return out;
  };
  const auto grad = gradient(gens, s, step);
  const auto pb = bracket_matrix(grad, grad);
  const FourVector P = g.P(s);
  const AntisymTensor2 J = g.J(s);
  auto gm = [](std::size_t a, std::size_t b) { return a == b ? kMetric[a] : 0.0; };
  // {J^{mn}, P^l} = g^{ml} P^n - g^{nl} P^m
  auto JP = [&](std::size_t m, std::size_t n, std::size_t l) { return gm(m, l) * P[n] - gm(n, l) * P[m]; };
  // {J^{mn}, J^{lr}} = g^{ml} J^{nr} - g^{nl} J^{mr} - g^{mr} J^{nl} + g^{nr} J^{ml}
  auto JJ = [&](std::size_t m, std::size_t n, std::size_t l, std::size_t r) {
    return gm(m, l) * J(n, r) - gm(n, l) * J(m, r) - gm(m, r) * J(n, l) + gm(n, r) * J(m, l);
  };
  ResidualAccumulator acc;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t k = 0; k < 10; ++k) {
      double expected = 0.0;
      if (i < 4 && k < 4) {
        expected = 0.0;
      } else if (i >= 4 && k < 4) {
        expected = JP(kPairs[i - 4][0], kPairs[i - 4][1], k);
      } else if (i < 4 && k >= 4) {
        expected = -JP(kPairs[k - 4][0], kPairs[k - 4][1], i);
      } else {
        expected = JJ(kPairs[i - 4][0], kPairs[i - 4][1], kPairs[k - 4][0], kPairs[k - 4][1]);
      }
      acc.add(pb[i][k], expected);
    }
  return {"poincare-algebra", acc.residual(), acc.count};
}

/// Sum of monomials in the flat chart coordinates; used as a smooth test
/// observable for the generic bracket rules.
struct PolynomialObservable {
  struct Term {
    double coefficient;
    std::vector<std::size_t> indices;
  };
  std::vector<Term> terms;

  double operator()(const CanonicalState& s) const {
    double total = 0.0;
    for (const auto& t : terms) {
      double v = t.coefficient;
      for (std::size_t i : t.indices) v *= s.get(i);
      total += v;
    }
    return total;
  }
};

/// One linear, two quadratic and one cubic monomial with coefficients in [-1, 1].
template <class Rng>
PolynomialObservable random_polynomial(std::size_t dimension, Rng& rng) {
  std::uniform_int_distribution<std::size_t> index(0, dimension - 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolynomialObservable f;
  for (std::size_t degree : {1u, 2u, 2u, 3u}) {
    PolynomialObservable::Term t{coef(rng), {}};
    for (std::size_t k = 0; k < degree; ++k) t.indices.push_back(index(rng));
    f.terms.push_back(std::move(t));
  }
  return f;
}

struct BracketRuleReport {
  double antisymmetry = 0.0;  // {A,B} + {B,A}
  double product = 0.0;       // {A,BC} - {A,B}C - {A,C}B
  double derivative = 0.0;    // {A,B^2} - 2B{A,B}
  double jacobi = 0.0;        // cyclic sum of {A,{B,C}}
};

/// Generic bracket rules evaluated on three observables at s.
inline BracketRuleReport verify_bracket_rules(const Observable& A, const Observable& B, const Observable& C,
                                              const CanonicalState& s, double step = kDefaultBracketStep) {
  auto pb = [step](const Observable& f, const Observable& g) {
    return Observable([f, g, step](const CanonicalState& st) { return bracket(f, g, st, step); });
  };
  const double b = B(s), c = C(s);
  const double AB = bracket(A, B, s, step), BA = bracket(B, A, s, step), AC = bracket(A, C, s, step);
  BracketRuleReport rep;
  {
    ResidualAccumulator acc;
    acc.add(AB + BA, 0.0);
    acc.max_ref = std::fabs(AB);
    rep.antisymmetry = acc.residual();
  }
  {
    const Observable BC = [B, C](const CanonicalState& st) { return B(st) * C(st); };
    ResidualAccumulator acc;
    acc.add(bracket(A, BC, s, step), AB * c + AC * b);
    rep.product = acc.residual();
  }
  {
    const Observable B2 = [B](const CanonicalState& st) { return B(st) * B(st); };
    ResidualAccumulator acc;
    acc.add(bracket(A, B2, s, step), 2.0 * b * AB);
    rep.derivative = acc.residual();
  }
  {
    const double j1 = bracket(A, pb(B, C), s, step);
    const double j2 = bracket(B, pb(C, A), s, step);
    const double j3 = bracket(C, pb(A, B), s, step);
    ResidualAccumulator acc;
    acc.add(j1 + j2 + j3, 0.0);
    acc.max_ref = std::max({std::fabs(j1), std::fabs(j2), std::fabs(j3)});
    rep.jacobi = acc.residual();
  }
  return rep;
}

struct InternalAlgebraReport {
  BracketCheck ell_tensor_self;     // {l^{mn}, l^{lr}}
  BracketCheck ell_vector_self;     // {l^m, l^n} = l^{mn}
  BracketCheck internal_vs_tensor;  // {A^m, l^{nl}}
  BracketCheck internal_vs_vector;  // {l^m, A^n} = {A^m, l^n} = eps A U
  BracketCheck internal_vs_momentum;  // {A, P} = 0

  double max_residual() const {
    return std::max({ell_tensor_self.residual, ell_vector_self.residual, internal_vs_tensor.residual,
                     internal_vs_vector.residual, internal_vs_momentum.residual});
  }
};

/// Internal-rotation algebra generated by the spatial internal angular
/// momentum, checked against an internal vector observable A.
inline InternalAlgebraReport verify_internal_rotation_algebra(const CanonicalState& s,
                                                              const Generators& g,
                                                              const VectorObservable& A,
                                                              double step = kDefaultBracketStep) {
  const auto ell_t_grad = gradient(family_of(internal_ell_tensor(g)), s, step);
  const auto ell_v_grad = gradient(family_of(internal_ell_vector(g)), s, step);
  const auto A_grad = gradient(family_of(A), s, step);
  const auto P_grad = gradient(family_of(g.P), s, step);

  const FourVector P = g.P(s);
  const FourVector U = P / invariant_mass(P);
  const FourVector Ul = U.lowered();
  const Projector D(P);
  const AntisymTensor2 ell = spatial_internal_ell({P, g.J(s)});
  const FourVector A0 = A(s);
  const FourVector Al = A0.lowered();

  InternalAlgebraReport rep;
  {
    const auto pb = bracket_matrix(ell_t_grad, ell_t_grad);
    ResidualAccumulator acc;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t l = 0; l < 4; ++l)
          for (std::size_t r = 0; r < 4; ++r) {
            const double expected =
                D(m, r) * ell(l, n) - D(n, l) * ell(m, r) + D(n, r) * ell(m, l) - D(m, l) * ell(r, n);
            acc.add(pb[4 * m + n][4 * l + r], expected);
          }
    rep.ell_tensor_self = {"internal-ell-tensor-algebra", acc.residual(), acc.count};
  }
  {
    const auto pb = bracket_matrix(ell_v_grad, ell_v_grad);
    ResidualAccumulator acc;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t n = 0; n < 4; ++n) acc.add(pb[m][n], ell(m, n));
    rep.ell_vector_self = {"internal-ell-vector-algebra", acc.residual(), acc.count};
  }
  {
    const auto pb = bracket_matrix(A_grad, ell_t_grad);
    ResidualAccumulator acc;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t l = 0; l < 4; ++l)
          acc.add(pb[m][4 * n + l], D(m, l) * A0[n] - D(m, n) * A0[l]);
    rep.internal_vs_tensor = {"internal-vector-rotation-tensor", acc.residual(), acc.count};
  }
  {
    const auto pb_lA = bracket_matrix(ell_v_grad, A_grad);
    const auto pb_Al = bracket_matrix(A_grad, ell_v_grad);
    ResidualAccumulator acc;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t n = 0; n < 4; ++n) {
        double expected = 0.0;
        for (std::size_t l = 0; l < 4; ++l)
          for (std::size_t r = 0; r < 4; ++r) expected += levi_civita(m, n, l, r) * Al[l] * Ul[r];
        acc.add(pb_lA[m][n], expected);
        acc.add(pb_Al[m][n], expected);
      }
    rep.internal_vs_vector = {"internal-vector-rotation-dual", acc.residual(), acc.count};
  }
  {
    const auto pb = bracket_matrix(A_grad, P_grad);
    ResidualAccumulator acc;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t n = 0; n < 4; ++n) acc.add(pb[m][n], 0.0);
    rep.internal_vs_momentum = {"internal-vector-translation", acc.residual(), acc.count};
  }
  return rep;
}

struct LrlSelfBracketReport {
  double residual = 0.0;           // {K,K} + F l, normalized
  double fitted_coefficient = 0.0;  // least-squares c in {K,K} = c l
  double proportionality_residual = 0.0;  // {K,K} - c_fit l, normalized
  double ell_dot_k_invariance = 0.0;      // max |{K^m, l.K}|, normalized
};

/// Self brackets of an internal vector K against -F l^{mn} with
/// F = d(K^2)/d(l^2) supplied in closed form.
inline LrlSelfBracketReport lrl_selfbracket_check(const VectorObservable& K, const Generators& g,
                                                  double F_partial, const CanonicalState& s,
                                                  double step = kDefaultBracketStep) {
  const auto K_grad = gradient(family_of(K), s, step);
  const auto pb = bracket_matrix(K_grad, K_grad);
  const AntisymTensor2 ell = spatial_internal_ell({g.P(s), g.J(s)});

  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < 4; ++n) {
      num += pb[m][n] * ell(m, n);
      den += ell(m, n) * ell(m, n);
    }
  LrlSelfBracketReport rep;
  rep.fitted_coefficient = den > 0.0 ? num / den : 0.0;

  ResidualAccumulator closed, fitted;
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < 4; ++n) {
      closed.add(pb[m][n], -F_partial * ell(m, n));
      fitted.add(pb[m][n], rep.fitted_coefficient * ell(m, n));
    }
  rep.residual = closed.residual();
  rep.proportionality_residual = fitted.residual();

  const VectorObservable ell_v = internal_ell_vector(g);
  const Observable ell_dot_K = [K, ell_v](const CanonicalState& st) { return dot(ell_v(st), K(st)); };
  const auto pb_lk = bracket_matrix(K_grad, gradient(family_of(ell_dot_K), s, step));
  ResidualAccumulator inv;
  for (std::size_t m = 0; m < 4; ++m) inv.add(pb_lk[m][0], 0.0);
  rep.ell_dot_k_invariance = inv.residual();
  return rep;
}

/// eta = -sign(d(K^2)/d(l^2)): +1 bound, -1 unbound.
inline int boundness_index(double F_partial) {
  if (F_partial == 0.0 || !std::isfinite(F_partial))
    throw std::domain_error("degenerate (transition) state");
  return F_partial > 0.0 ? -1 : 1;
}

struct LocalizabilityReport {
  double residual = 0.0;             // {Q,Q} vs closed_coefficient * l
  double fitted_coefficient = 0.0;
  double canonical_coefficient = 0.0;  // -1/M^2
  bool canonical = false;            // {Q,Q} = -l/M^2 holds
};

/// Self brackets of the shift vector against their closed form and against
/// the condition required for a canonical (localizable) CM coordinate.
inline LocalizabilityReport localizability_check(const VectorObservable& Q, const Generators& g,
                                                 double closed_coefficient, const CanonicalState& s,
                                                 double tol = 1e-6,
                                                 double step = kDefaultBracketStep) {
  const auto grad = gradient(family_of(Q), s, step);
  const auto pb = bracket_matrix(grad, grad);
  const FourVector P = g.P(s);
  const double M2 = -dot(P, P);
  const AntisymTensor2 ell = spatial_internal_ell({P, g.J(s)});

  LocalizabilityReport rep;
  rep.canonical_coefficient = -1.0 / M2;
  double num = 0.0, den = 0.0;
  ResidualAccumulator closed, canon;
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < 4; ++n) {
      closed.add(pb[m][n], closed_coefficient * ell(m, n));
      canon.add(pb[m][n], rep.canonical_coefficient * ell(m, n));
      num += pb[m][n] * ell(m, n);
      den += ell(m, n) * ell(m, n);
    }
  rep.residual = closed.residual();
  rep.fitted_coefficient = den > 0.0 ? num / den : 0.0;
  rep.canonical = canon.residual() < tol;
  return rep;
}

}  // namespace relcm
