#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "qbertrand/error.hpp"

namespace qbertrand {

using Vec3 = std::array<double, 3>;

constexpr double dot(const Vec3& x, const Vec3& y) noexcept {
  return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
}

constexpr Vec3 cross(const Vec3& x, const Vec3& y) noexcept {
  return {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
}

/// Real quaternion q = s + v1 e1 + v2 e2 + v3 e3.
///
/// Identified with the point (s, v1, v2, v3) of R^4; a quaternion with s == 0
/// is a spatial quaternion and stands for a point of R^3. Plain value type:
/// nothing is ever normalized implicitly.
struct Quaternion {
  double s = 0.0;
  Vec3 v{};

  constexpr Quaternion() = default;
  constexpr Quaternion(double scalar, const Vec3& vector) : s(scalar), v(vector) {}

  static constexpr Quaternion from_r4(const std::array<double, 4>& x) {
    return {x[0], {x[1], x[2], x[3]}};
  }
  static constexpr Quaternion spatial(const Vec3& x) { return {0.0, x}; }

  constexpr std::array<double, 4> r4() const { return {s, v[0], v[1], v[2]}; }
  constexpr double operator[](int i) const { return i == 0 ? s : v[i - 1]; }

  constexpr bool is_spatial() const { return s == 0.0; }

  bool is_finite() const {
    return std::isfinite(s) && std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
  }

  constexpr Quaternion& operator+=(const Quaternion& q) {
    s += q.s;
    for (int i = 0; i < 3; ++i) v[i] += q.v[i];
    return *this;
  }
  constexpr Quaternion& operator-=(const Quaternion& q) {
    s -= q.s;
    for (int i = 0; i < 3; ++i) v[i] -= q.v[i];
    return *this;
  }
  constexpr Quaternion& operator*=(double c) {
    s *= c;
    for (auto& x : v) x *= c;
    return *this;
  }

  friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

inline constexpr Quaternion kIdentity{1.0, {0.0, 0.0, 0.0}};
inline constexpr Quaternion kE1{0.0, {1.0, 0.0, 0.0}};
inline constexpr Quaternion kE2{0.0, {0.0, 1.0, 0.0}};
inline constexpr Quaternion kE3{0.0, {0.0, 0.0, 1.0}};

constexpr Quaternion add(const Quaternion& p, const Quaternion& q) {
  Quaternion r = p;
  r += q;
  return r;
}

constexpr Quaternion scale(double c, const Quaternion& q) {
  Quaternion r = q;
  r *= c;
  return r;
}

constexpr Quaternion conjugate(const Quaternion& q) { return {q.s, {-q.v[0], -q.v[1], -q.v[2]}}; }

// p*q = SpSq - <Vp,Vq> + Sp Vq + Sq Vp + Vp ^ Vq
constexpr Quaternion mul(const Quaternion& p, const Quaternion& q) {
  const Vec3 c = cross(p.v, q.v);
  Quaternion r;
  r.s = p.s * q.s - dot(p.v, q.v);
  for (int i = 0; i < 3; ++i) r.v[i] = p.s * q.v[i] + q.s * p.v[i] + c[i];
  return r;
}

/// Quaternion (Euclidean) inner product h(p, q): the plain R^4 dot product.
constexpr double inner(const Quaternion& p, const Quaternion& q) { return p.s * q.s + dot(p.v, q.v); }

inline double norm(const Quaternion& q) { return std::sqrt(inner(q, q)); }

constexpr Quaternion operator+(const Quaternion& p, const Quaternion& q) { return add(p, q); }
constexpr Quaternion operator-(const Quaternion& p, const Quaternion& q) {
  Quaternion r = p;
  r -= q;
  return r;
}
constexpr Quaternion operator-(const Quaternion& q) { return scale(-1.0, q); }
constexpr Quaternion operator*(double c, const Quaternion& q) { return scale(c, q); }
constexpr Quaternion operator*(const Quaternion& q, double c) { return scale(c, q); }
constexpr Quaternion operator/(const Quaternion& q, double c) { return scale(1.0 / c, q); }
constexpr Quaternion operator*(const Quaternion& p, const Quaternion& q) { return mul(p, q); }

inline double max_abs_diff(const Quaternion& p, const Quaternion& q) {
  double m = std::abs(p.s - q.s);
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(p.v[i] - q.v[i]));
  return m;
}

inline bool approx_equal(const Quaternion& p, const Quaternion& q, double tol) {
  return max_abs_diff(p, q) <= tol;
}

/// Max componentwise gap between p*q and the cross product Vp ^ Vq, for
/// spatial p, q with h(p, q) = 0. The gap is zero up to round-off.
///
/// `orthogonality_tol` is relative to |p||q|.
inline double spatial_cross_check(const Quaternion& p, const Quaternion& q,
                                  double orthogonality_tol = 1e-9) {
  if (!p.is_spatial() || !q.is_spatial()) {
    throw Error(ErrorKind::InvalidInput, "spatial_cross_check: inputs must be spatial quaternions");
  }
  if (std::abs(inner(p, q)) > orthogonality_tol * norm(p) * norm(q)) {
    throw Error(ErrorKind::InvalidInput, "spatial_cross_check: inputs must be orthogonal");
  }
  return max_abs_diff(mul(p, q), Quaternion::spatial(cross(p.v, q.v)));
}

inline std::ostream& operator<<(std::ostream& os, const Quaternion& q) {
  return os << '(' << q.s << ", [" << q.v[0] << ", " << q.v[1] << ", " << q.v[2] << "])";
}

}  // namespace qbertrand
