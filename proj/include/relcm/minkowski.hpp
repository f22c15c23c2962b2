#pragma once

// Minkowski-space linear algebra with metric diag(-1, 1, 1, 1).
// All storage is contravariant; index lowering is explicit at use sites.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "relcm/vec3.hpp"

namespace relcm {

inline constexpr std::array<double, 4> kMetric{-1.0, 1.0, 1.0, 1.0};

/// Contravariant 4-vector, components (t, x, y, z).
struct FourVector {
  std::array<double, 4> c{};

  constexpr FourVector() = default;
  constexpr FourVector(double t, double x, double y, double z) : c{t, x, y, z} {}
  constexpr FourVector(double t, const Vec3& s) : c{t, s[0], s[1], s[2]} {}

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  /// Covariant components v_mu = g_{mu nu} v^nu.
  constexpr FourVector lowered() const {
    return {-c[0], c[1], c[2], c[3]};
  }
  constexpr Vec3 spatial() const { return {c[1], c[2], c[3]}; }

  constexpr FourVector& operator+=(const FourVector& o) {
    for (std::size_t i = 0; i < 4; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr FourVector& operator-=(const FourVector& o) {
    for (std::size_t i = 0; i < 4; ++i) c[i] -= o.c[i];
    return *this;
  }
  constexpr FourVector& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
};

constexpr FourVector operator+(FourVector a, const FourVector& b) { return a += b; }
constexpr FourVector operator-(FourVector a, const FourVector& b) { return a -= b; }
constexpr FourVector operator-(FourVector a) { return a *= -1.0; }
constexpr FourVector operator*(FourVector a, double s) { return a *= s; }
constexpr FourVector operator*(double s, FourVector a) { return a *= s; }
constexpr FourVector operator/(FourVector a, double s) { return a *= 1.0 / s; }

/// a . b = a^mu b_mu = -a0 b0 + a1 b1 + a2 b2 + a3 b3
constexpr double dot(const FourVector& a, const FourVector& b) {
  return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double max_abs(const FourVector& a) {
  double m = 0.0;
  for (double x : a.c) m = std::fmax(m, std::fabs(x));
  return m;
}

inline double max_abs_diff(const FourVector& a, const FourVector& b) {
  return max_abs(a - b);
}

/// Invariant mass sqrt(-P.P); throws for a non-timelike argument.
inline double invariant_mass(const FourVector& P) {
  const double m2 = -dot(P, P);
  if (!(m2 > 0.0)) throw std::domain_error("non-timelike total momentum");
  return std::sqrt(m2);
}

using Mat4 = std::array<std::array<double, 4>, 4>;

/// Rank-2 antisymmetric tensor T^{mu nu}; only the six upper-triangle
/// components are stored, so antisymmetry is exact.
class AntisymTensor2 {
 public:
  constexpr AntisymTensor2() = default;

  constexpr double operator()(std::size_t mu, std::size_t nu) const {
    if (mu == nu) return 0.0;
    return mu < nu ? v_[slot(mu, nu)] : -v_[slot(nu, mu)];
  }

  constexpr void set(std::size_t mu, std::size_t nu, double value) {
    if (mu == nu) return;
    if (mu < nu)
      v_[slot(mu, nu)] = value;
    else
      v_[slot(nu, mu)] = -value;
  }

  /// Covariant component T_{mu nu}.
  constexpr double lower(std::size_t mu, std::size_t nu) const {
    return kMetric[mu] * kMetric[nu] * (*this)(mu, nu);
  }

  constexpr const std::array<double, 6>& components() const { return v_; }
  constexpr std::array<double, 6>& components() { return v_; }

  Mat4 matrix() const {
    Mat4 m{};
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) m[a][b] = (*this)(a, b);
    return m;
  }

  /// Builds from a full matrix, keeping the upper triangle.
  static AntisymTensor2 from_matrix(const Mat4& m) {
    AntisymTensor2 t;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a + 1; b < 4; ++b) t.set(a, b, m[a][b]);
    return t;
  }

  AntisymTensor2& operator+=(const AntisymTensor2& o) {
    for (std::size_t i = 0; i < 6; ++i) v_[i] += o.v_[i];
    return *this;
  }
  AntisymTensor2& operator-=(const AntisymTensor2& o) {
    for (std::size_t i = 0; i < 6; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  AntisymTensor2& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }

 private:
  static constexpr std::size_t slot(std::size_t mu, std::size_t nu) {
    // (0,1)(0,2)(0,3)(1,2)(1,3)(2,3)
    return mu == 0 ? nu - 1 : (mu == 1 ? nu + 1 : 5);
  }

  std::array<double, 6> v_{};
};

inline AntisymTensor2 operator+(AntisymTensor2 a, const AntisymTensor2& b) { return a += b; }
inline AntisymTensor2 operator-(AntisymTensor2 a, const AntisymTensor2& b) { return a -= b; }
inline AntisymTensor2 operator*(AntisymTensor2 a, double s) { return a *= s; }
inline AntisymTensor2 operator*(double s, AntisymTensor2 a) { return a *= s; }

inline double max_abs(const AntisymTensor2& t) {
  double m = 0.0;
  for (double x : t.components()) m = std::fmax(m, std::fabs(x));
  return m;
}

inline double max_abs_diff(const AntisymTensor2& a, const AntisymTensor2& b) {
  return max_abs(a - b);
}

/// a^mu b^nu - a^nu b^mu
inline AntisymTensor2 wedge(const FourVector& a, const FourVector& b) {
  AntisymTensor2 t;
  for (std::size_t mu = 0; mu < 4; ++mu)
    for (std::size_t nu = mu + 1; nu < 4; ++nu)
      t.set(mu, nu, a[mu] * b[nu] - a[nu] * b[mu]);
  return t;
}

/// T^{mu nu} v_nu
inline FourVector contract(const AntisymTensor2& t, const FourVector& v) {
  const FourVector vl = v.lowered();
  FourVector out;
  for (std::size_t mu = 0; mu < 4; ++mu)
    for (std::size_t nu = 0; nu < 4; ++nu) out[mu] += t(mu, nu) * vl[nu];
  return out;
}

/// Half the full contraction T^{mu nu} T_{mu nu}.
inline double half_square(const AntisymTensor2& t) {
  double s = 0.0;
  for (std::size_t mu = 0; mu < 4; ++mu)
    for (std::size_t nu = 0; nu < 4; ++nu) s += t(mu, nu) * t.lower(mu, nu);
  return 0.5 * s;
}

/// Spatial projector Delta^{mu nu} = g^{mu nu} + P^mu P^nu / M^2 orthogonal
/// to a timelike momentum.
class Projector {
 public:
  explicit Projector(const FourVector& P) {
    const double m2 = -dot(P, P);
    if (!(m2 > 0.0)) throw std::domain_error("non-timelike total momentum");
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        up_[a][b] = (a == b ? kMetric[a] : 0.0) + P[a] * P[b] / m2;
  }

  /// Delta^{mu nu}
  double operator()(std::size_t mu, std::size_t nu) const { return up_[mu][nu]; }

  /// Delta^mu_nu
  double mixed(std::size_t mu, std::size_t nu) const { return up_[mu][nu] * kMetric[nu]; }

  const Mat4& upper() const { return up_; }

  FourVector apply(const FourVector& v) const {
    FourVector out;
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t nu = 0; nu < 4; ++nu) out[mu] += mixed(mu, nu) * v[nu];
    return out;
  }

  /// Delta^mu_lambda Delta^nu_rho T^{lambda rho}
  AntisymTensor2 apply(const AntisymTensor2& t) const {
    Mat4 tmp{};
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t rho = 0; rho < 4; ++rho)
        for (std::size_t la = 0; la < 4; ++la) tmp[mu][rho] += mixed(mu, la) * t(la, rho);
    AntisymTensor2 out;
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t nu = mu + 1; nu < 4; ++nu) {
        double s = 0.0;
        for (std::size_t rho = 0; rho < 4; ++rho) s += tmp[mu][rho] * mixed(nu, rho);
        out.set(mu, nu, s);
      }
    return out;
  }

 private:
  Mat4 up_{};
};

inline Projector projector(const FourVector& P) { return Projector(P); }

namespace detail {

constexpr int permutation_sign(std::array<std::size_t, 4> p) {
  int sign = 1;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) sign = -sign;
    }
  return sign;
}

constexpr std::array<int, 256> make_levi_civita() {
  std::array<int, 256> t{};
  for (std::size_t i = 0; i < 256; ++i)
    t[i] = permutation_sign({i >> 6, (i >> 4) & 3, (i >> 2) & 3, i & 3});
  return t;
}

inline constexpr std::array<int, 256> kLeviCivita = make_levi_civita();

}  // namespace detail

/// epsilon^{mu nu lambda rho} with epsilon^{0123} = +1 (so epsilon_{0123} = -1).
constexpr int levi_civita(std::size_t mu, std::size_t nu, std::size_t la, std::size_t rho) {
  return detail::kLeviCivita[(mu << 6) | (nu << 4) | (la << 2) | rho];
}

inline void require_unit_timelike(const FourVector& U, double tol = 1e-10) {
  if (std::fabs(dot(U, U) + 1.0) > tol)
    throw std::domain_error("reference 4-velocity is not unit timelike");
}

/// Vector dual l^mu = 1/2 eps^{mu nu lambda rho} l_{nu lambda} U_rho.
inline FourVector dualize(const AntisymTensor2& ell, const FourVector& U) {
  require_unit_timelike(U);
  const FourVector Ul = U.lowered();
  FourVector out;
  for (std::size_t mu = 0; mu < 4; ++mu) {
    double s = 0.0;
    for (std::size_t nu = 0; nu < 4; ++nu)
      for (std::size_t la = 0; la < 4; ++la)
        for (std::size_t rho = 0; rho < 4; ++rho) {
          const int e = levi_civita(mu, nu, la, rho);
          if (e != 0) s += e * ell.lower(nu, la) * Ul[rho];
        }
    out[mu] = 0.5 * s;
  }
  return out;
}

/// Inverse duality l^{mu nu} = eps^{mu nu lambda rho} l_lambda U_rho, valid
/// for l orthogonal to U.
inline AntisymTensor2 undualize(const FourVector& ell, const FourVector& U) {
  require_unit_timelike(U);
  if (std::fabs(dot(ell, U)) > 1e-10 * std::fmax(1.0, max_abs(ell)))
    throw std::domain_error("dual vector is not orthogonal to the reference 4-velocity");
  const FourVector el = ell.lowered();
  const FourVector Ul = U.lowered();
  AntisymTensor2 out;
  for (std::size_t mu = 0; mu < 4; ++mu)
    for (std::size_t nu = mu + 1; nu < 4; ++nu) {
      double s = 0.0;
      for (std::size_t la = 0; la < 4; ++la)
        for (std::size_t rho = 0; rho < 4; ++rho) {
          const int e = levi_civita(mu, nu, la, rho);
          if (e != 0) s += e * el[la] * Ul[rho];
        }
      out.set(mu, nu, s);
    }
  return out;
}

/// Mixed Lorentz matrix Lambda^mu_nu acting on contravariant components.
class LorentzMatrix {
 public:
  LorentzMatrix() {
    for (std::size_t i = 0; i < 4; ++i) m_[i][i] = 1.0;
  }
  explicit LorentzMatrix(const Mat4& m) : m_(m) {}

  double operator()(std::size_t mu, std::size_t nu) const { return m_[mu][nu]; }

  FourVector operator()(const FourVector& v) const {
    FourVector out;
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t nu = 0; nu < 4; ++nu) out[mu] += m_[mu][nu] * v[nu];
    return out;
  }

  AntisymTensor2 operator()(const AntisymTensor2& t) const {
    AntisymTensor2 out;
    for (std::size_t mu = 0; mu < 4; ++mu)
      for (std::size_t nu = mu + 1; nu < 4; ++nu) {
        double s = 0.0;
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b) s += m_[mu][a] * m_[nu][b] * t(a, b);
        out.set(mu, nu, s);
      }
    return out;
  }

  friend LorentzMatrix operator*(const LorentzMatrix& a, const LorentzMatrix& b) {
    Mat4 m{};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) m[i][j] += a.m_[i][k] * b.m_[k][j];
    return LorentzMatrix(m);
  }

 private:
  Mat4 m_{};
};

/// Pure boost taking a particle at rest to 3-velocity v.
inline LorentzMatrix boost_matrix(const Vec3& v) {
  const double v2 = dot(v, v);
  if (!(v2 < 1.0)) throw std::domain_error("boost speed must be below 1");
  Mat4 m{};
  const double gamma = 1.0 / std::sqrt(1.0 - v2);
  m[0][0] = gamma;
  for (std::size_t i = 0; i < 3; ++i) {
    m[0][i + 1] = gamma * v[i];
    m[i + 1][0] = gamma * v[i];
    for (std::size_t j = 0; j < 3; ++j)
      m[i + 1][j + 1] = (i == j ? 1.0 : 0.0) + (v2 > 0.0 ? (gamma - 1.0) * v[i] * v[j] / v2 : 0.0);
  }
  return LorentzMatrix(m);
}

/// Spatial rotation by `angle` about a (not necessarily normalized) axis.
inline LorentzMatrix rotation_matrix(const Vec3& axis, double angle) {
  const Vec3 n = axis / norm(axis);
  const double c = std::cos(angle), s = std::sin(angle);
  Mat4 m{};
  m[0][0] = 1.0;
  const std::array<std::array<double, 3>, 3> k{{{0.0, -n[2], n[1]}, {n[2], 0.0, -n[0]}, {-n[1], n[0], 0.0}}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      m[i + 1][j + 1] = (i == j ? c : 0.0) + s * k[i][j] + (1.0 - c) * n[i] * n[j];
  return LorentzMatrix(m);
}

inline FourVector boost(const Vec3& v, const FourVector& a) { return boost_matrix(v)(a); }

}  // namespace relcm
