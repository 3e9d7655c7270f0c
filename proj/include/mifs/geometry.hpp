#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mifs/common.hpp"

namespace mifs {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Spectral (operator) norm of a 2x2 matrix, closed form via the singular
// values of A^T A.
inline double op_norm(const Mat2& a) {
  const Mat2 m = a.transpose() * a;
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::max(0.0, tr * tr / 4.0 - det);
  return std::sqrt(std::max(0.0, tr / 2.0 + std::sqrt(disc)));
}

inline double op_norm_inv(const Mat2& a) {
  // Smallest singular value.
  const Mat2 m = a.transpose() * a;
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::max(0.0, tr * tr / 4.0 - det);
  return std::sqrt(std::max(0.0, tr / 2.0 - std::sqrt(disc)));
}

struct Round {
  Vec2 center{0.0, 0.0};
  double radius{1.0};

  bool contains(const Vec2& p, double slack = 0.0) const {
    return (p - center).norm() <= radius + slack;
  }
  // Positive inside, negative outside.
  double margin(const Vec2& p) const { return radius - (p - center).norm(); }
};

// Eigenvalues of a real 2x2 matrix. Real pair when the discriminant is
// nonnegative; otherwise the conjugate pair (re, +-im).
struct Eigen2 {
  bool real{true};
  double a{0.0}, b{0.0};  // real: the two eigenvalues; complex: re, |im|
};

inline Eigen2 eigenvalues2(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m.determinant();
  const double disc = tr * tr / 4.0 - det;
  Eigen2 e;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    e.real = true;
    e.a = tr / 2.0 - s;
    e.b = tr / 2.0 + s;
  } else {
    e.real = false;
    e.a = tr / 2.0;
    e.b = std::sqrt(-disc);
  }
  return e;
}

// Unit eigenvector for a real eigenvalue of a 2x2 matrix.
inline Vec2 eigenvector2(const Mat2& m, double lambda) {
  const Mat2 a = m - lambda * Mat2::Identity();
  Vec2 v;
  // Pick the larger row to avoid cancellation.
  if (std::abs(a(0, 0)) + std::abs(a(0, 1)) >= std::abs(a(1, 0)) + std::abs(a(1, 1)))
    v = Vec2(-a(0, 1), a(0, 0));
  else
    v = Vec2(-a(1, 1), a(1, 0));
  const double n = v.norm();
  if (n < 1e-300) return Vec2(1.0, 0.0);
  return v / n;
}

// Rotated frame: x' along (1,1)/sqrt(2), i.e. the line {x=y} maps to the
// x'-axis. Used for the zig-zag curve graphs.
inline Vec2 to_diag_frame(const Vec2& p) {
  static const double s = 1.0 / std::sqrt(2.0);
  return Vec2(s * (p.x() + p.y()), s * (p.y() - p.x()));
}
inline Vec2 from_diag_frame(const Vec2& q) {
  static const double s = 1.0 / std::sqrt(2.0);
  return Vec2(s * (q.x() - q.y()), s * (q.x() + q.y()));
}

// C^1 smoothstep on [0,1]: h(0)=0, h(1)=1, h'(0)=h'(1)=0, max|h'| = 1.5.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}
inline double smoothstep_d(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 6.0 * t * (1.0 - t);
}

// Quartic cap profile on [-1,1]: rho(0)=1, rho(+-1)=0, rho'(+-1)=0, C^1.
inline double cap_profile(double s) {
  const double u = 1.0 - s * s;
  return u <= 0.0 ? 0.0 : u * u;
}
inline double cap_profile_d(double s) {
  const double u = 1.0 - s * s;
  return u <= 0.0 ? 0.0 : -4.0 * s * u;
}

}  // namespace mifs
