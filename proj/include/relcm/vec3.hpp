#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace relcm {

/// Euclidean 3-vector used by the fixed-frame (non-covariant) models.
struct Vec3 {
  std::array<double, 3> c{};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : c{x, y, z} {}

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  constexpr Vec3& operator+=(const Vec3& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] -= o.c[i];
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(Vec3 a) { return a *= -1.0; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= 1.0 / s; }

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double max_abs_diff(const Vec3& a, const Vec3& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < 3; ++i) m = std::fmax(m, std::fabs(a[i] - b[i]));
  return m;
}

/// Angle in [0, pi] between two non-zero vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

}  // namespace relcm
