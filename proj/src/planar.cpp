#include "mifs/planar.hpp"

#include <cmath>

namespace mifs {

double KMapCubic::eval(double y) const {
  if (std::abs(y) <= ycap) return y - a * y * y * y;
  const double s = eval_d(ycap);  // slope of the continuation
  const double v = ycap - a * ycap * ycap * ycap;
  return y > 0 ? v + s * (y - ycap) : -v + s * (y + ycap);
}

double KMapCubic::eval_d(double y) const {
  const double yy = std::min(std::abs(y), ycap);
  return 1.0 - 3.0 * a * yy * yy;
}

double KMapCubic::invert(double v) const {
  // k is strictly increasing (ycap < 1/sqrt(3a) enforced by builders).
  double lo = -1e3, hi = 1e3;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid) < v ? lo : hi) = mid;
  }
  double y = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    const double d = eval_d(y);
    if (d == 0.0) break;
    y -= (eval(y) - v) / d;
  }
  return y;
}

Point2 flow_time1(const VectorField& field, const Point2& p0, int steps,
                  double sign, Mat2* jac) {
  // Short-circuit: a point whose whole step stays outside the support box
  // does not move. The fields are bounded, so one bbox test with a safety
  // margin per call is enough for exact-zero displacement detection.
  Vec2 lo, hi;
  if (field_bbox(field, &lo, &hi)) {
    if (p0.x() < lo.x() || p0.x() > hi.x() || p0.y() < lo.y() ||
        p0.y() > hi.y()) {
      // Outside the support the field vanishes at every RK4 stage.
      if (jac) jac->setIdentity();
      return p0;
    }
  }
  const double h = sign / steps;
  Vec2 p = p0;
  Mat2 J = Mat2::Identity();
  Vec2 k1, k2, k3, k4;
  Mat2 D1, D2, D3, D4;
  for (int s = 0; s < steps; ++s) {
    eval_field(field, p, &k1, &D1);
    eval_field(field, p + 0.5 * h * k1, &k2, &D2);
    eval_field(field, p + 0.5 * h * k2, &k3, &D3);
    eval_field(field, p + h * k3, &k4, &D4);
    if (jac) {
      const Mat2 K1 = D1;
      const Mat2 K2 = D2 * (Mat2::Identity() + 0.5 * h * K1);
      const Mat2 K3 = D3 * (Mat2::Identity() + 0.5 * h * K2);
      const Mat2 K4 = D4 * (Mat2::Identity() + h * K3);
      J = (Mat2::Identity() + h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)) * J;
    }
    p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (jac) *jac = J;
  return p;
}

Point2 apply_prim(const Primitive& prim, const Point2& p, Mat2* jac) {
  return std::visit(
      [&](const auto& pr) -> Point2 {
        using T = std::decay_t<decltype(pr)>;
        if constexpr (std::is_same_v<T, Affine>) {
          if (jac) *jac = pr.matrix;
          return pr.matrix * p + pr.offset;
        } else if constexpr (std::is_same_v<T, Homothety>) {
          if (jac) *jac = pr.factor * Mat2::Identity();
          return pr.center + pr.factor * (p - pr.center);
        } else if constexpr (std::is_same_v<T, DiagonalSaddleNode>) {
          if (jac) {
            jac->setZero();
            (*jac)(0, 0) = pr.lambda0;
            (*jac)(1, 1) = pr.k.eval_d(p.y());
          }
          return Point2(pr.lambda0 * p.x(), pr.k.eval(p.y()));
        } else if constexpr (std::is_same_v<T, BumpFlow>) {
          return flow_time1(pr.field, p, pr.integrationSteps, 1.0, jac);
        } else {
          return flow_time1(VectorField(pr.field), p, pr.integrationSteps, 1.0,
                            jac);
        }
      },
      prim);
}

Point2 apply_prim_inverse(const Primitive& prim, const Point2& p, Mat2* jac) {
  return std::visit(
      [&](const auto& pr) -> Point2 {
        using T = std::decay_t<decltype(pr)>;
        if constexpr (std::is_same_v<T, Affine>) {
          const double det = pr.matrix.determinant();
          if (std::abs(det) < 1e-300)
            throw DomainError("affine primitive is singular");
          const Mat2 inv = pr.matrix.inverse();
          if (jac) *jac = inv;
          return inv * (p - pr.offset);
        } else if constexpr (std::is_same_v<T, Homothety>) {
          if (jac) *jac = (1.0 / pr.factor) * Mat2::Identity();
          return pr.center + (p - pr.center) / pr.factor;
        } else if constexpr (std::is_same_v<T, DiagonalSaddleNode>) {
          const double y = pr.k.invert(p.y());
          if (jac) {
            jac->setZero();
            (*jac)(0, 0) = 1.0 / pr.lambda0;
            (*jac)(1, 1) = 1.0 / pr.k.eval_d(y);
          }
          return Point2(p.x() / pr.lambda0, y);
        } else if constexpr (std::is_same_v<T, BumpFlow>) {
          return flow_time1(pr.field, p, pr.integrationSteps, -1.0, jac);
        } else {
          return flow_time1(VectorField(pr.field), p, pr.integrationSteps, -1.0,
                            jac);
        }
      },
      prim);
}

Point2 apply(const MapChain& chain, const Point2& p) {
  Point2 q = p;
  for (const auto& pr : chain.primitives) q = apply_prim(pr, q, nullptr);
  return q;
}

Point2 apply_inverse(const MapChain& chain, const Point2& p) {
  Point2 q = p;
  for (auto it = chain.primitives.rbegin(); it != chain.primitives.rend(); ++it)
    q = apply_prim_inverse(*it, q, nullptr);
  return q;
}

Jacobian2 jacobian(const MapChain& chain, const Point2& p) {
  Point2 q = p;
  Mat2 J = Mat2::Identity();
  for (const auto& pr : chain.primitives) {
    Mat2 Jp;
    q = apply_prim(pr, q, &Jp);
    J = Jp * J;
  }
  return J;
}

Jacobian2 jacobian_inverse(const MapChain& chain, const Point2& p) {
  Point2 q = p;
  Mat2 J = Mat2::Identity();
  for (auto it = chain.primitives.rbegin(); it != chain.primitives.rend(); ++it) {
    Mat2 Jp;
    q = apply_prim_inverse(*it, q, &Jp);
    J = Jp * J;
  }
  return J;
}

C1Distance c1_distance(const MapChain& a, const MapChain& b, const Round& domain,
                       int grid) {
  C1Distance d;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double x = -1.0 + 2.0 * (i + 0.5) / grid;
      const double y = -1.0 + 2.0 * (j + 0.5) / grid;
      if (x * x + y * y > 1.0) continue;
      const Point2 p = domain.center + domain.radius * Vec2(x, y);
      const Point2 fa = apply(a, p);
      const Point2 fb = apply(b, p);
      const Mat2 ja = jacobian(a, p);
      const Mat2 jb = jacobian(b, p);
      d.c0 = std::max(d.c0, (fa - fb).norm());
      d.c1 = std::max(d.c1, op_norm(ja - jb));
    }
  }
  d.c1 = std::max(d.c1, d.c0);
  return d;
}

}  // namespace mifs
