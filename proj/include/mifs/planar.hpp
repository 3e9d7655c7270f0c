#pragma once

#include <variant>
#include <vector>

#include "mifs/common.hpp"
#include "mifs/fields.hpp"
#include "mifs/geometry.hpp"

namespace mifs {

using Point2 = Vec2;
using Jacobian2 = Mat2;

// --- Primitives -----------------------------------------------------------

struct Affine {
  Mat2 matrix{Mat2::Identity()};
  Vec2 offset{0.0, 0.0};
};

struct Homothety {
  double factor{0.5};
  Vec2 center{0.0, 0.0};
};

// 1D map k(y) = y - a*y^3 on |y| <= ycap, linear C^1 continuation outside.
// k(0) = 0, k'(0) = 1, topologically attracting near 0.
struct KMapCubic {
  double a{1.0};
  double ycap{0.5};

  double eval(double y) const;
  double eval_d(double y) const;
  double invert(double v) const;  // bisection + Newton to 1e-12
};

struct DiagonalSaddleNode {
  double lambda0{0.5};
  KMapCubic k;
};

struct BumpFlow {
  VectorField field{ZeroField{}};
  int integrationSteps{64};
};

struct NormalScalingFlowPrim {
  NormalScalingField field;
  int integrationSteps{64};
};

using Primitive =
    std::variant<Affine, Homothety, DiagonalSaddleNode, BumpFlow,
                 NormalScalingFlowPrim>;

// Ordered composition of primitives, applied left to right.
struct MapChain {
  std::vector<Primitive> primitives;

  static MapChain identity() { return {}; }
  static MapChain of(Primitive p) { return {{std::move(p)}}; }

  MapChain then(const MapChain& next) const {
    MapChain out = *this;
    out.primitives.insert(out.primitives.end(), next.primitives.begin(),
                          next.primitives.end());
    return out;
  }
};

// --- Operations ------------------------------------------------------------

Point2 apply(const MapChain& chain, const Point2& p);
Point2 apply_inverse(const MapChain& chain, const Point2& p);
Jacobian2 jacobian(const MapChain& chain, const Point2& p);
Jacobian2 jacobian_inverse(const MapChain& chain, const Point2& p);

// Single-primitive evaluation with the tangent carried along (exact discrete
// tangent of the RK4 step for flows).
Point2 apply_prim(const Primitive& prim, const Point2& p, Mat2* jac);
Point2 apply_prim_inverse(const Primitive& prim, const Point2& p, Mat2* jac);

// Time-1 RK4 map of a field (sign=-1 integrates the negated field) together
// with the exact Jacobian of the discrete map when jac != nullptr.
Point2 flow_time1(const VectorField& field, const Point2& p, int steps,
                  double sign, Mat2* jac);

struct C1Distance {
  double c0{0.0};
  double c1{0.0};  // max over samples of max(|a-b|, ||Da-Db||_op)
};

// Sampled C0/C1 distance over a grid x grid sample of the disc.
C1Distance c1_distance(const MapChain& a, const MapChain& b, const Round& domain,
                       int grid);

}  // namespace mifs
