#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "mifs/geometry.hpp"

namespace mifs {

// C^1 scalar profile on a strictly increasing grid, Hermite between samples.
struct Profile1 {
  std::vector<double> x, y, dy;

  bool empty() const { return x.empty(); }
  double eval(double u) const;
  double eval_d(double u) const;
  double max_abs() const;
  double max_abs_d() const;

  static Profile1 from_function(const std::function<double(double)>& f,
                                const std::function<double(double)>& fd,
                                double a, double b, int n);
};

// --- Closed-form vector fields (all vanish identically outside their
// declared support). Each evaluates the field and its spatial differential.

struct ZeroField {};

// Neutralizes the y-contraction of H_lambda inside a box around the origin:
//   V(u,v) = (0, g(u) * h(v)),   h(v) = -log(lambda) * v * cap(v/v0),
// g = 1 for |u| <= u1, 0 for |u| >= u2 (smoothstep ramp). The time-1 map of
// V composed with H_lambda is (lambda*x, k(y)) on the strip |x| <= u1/lambda
// with k(0)=0, k'(0)=1 and k topologically attracting.
struct CoreNeutralizerField {
  double lambda{0.5};
  double scale{1.0};  // box: u1 = 0.72*scale, u2 = 0.82*scale, v0 = 0.2*scale
  double u1r{0.72}, u2r{0.82}, v0r{0.2};
};

// Radial blend of a linear field: V(p) = s(|p-c|) * L * (p-c); s = 1 inside
// rIn, 0 outside rOut. Time-1 map realizes exp(L) exactly inside rIn.
struct MatrixRampField {
  Mat2 L{Mat2::Zero()};
  double rIn{0.25}, rOut{0.5};
  Vec2 center{0.0, 0.0};
};

// Vertical transport of a graph band inside a frame anchored at `center`
// (optionally rotated 45 degrees so {x=y} becomes the x'-axis):
//   V'(x',y') = (0, d(x') * win(y'))
// win = 1 on [winLo,winHi], smoothstep to 0 over `taper` on both sides.
// Curve points inside the window move by exactly d(x') in unit time.
struct GraphShearField {
  Vec2 center{0.0, 0.0};
  bool rotated45{false};
  Profile1 d;
  double winLo{-0.5}, winHi{0.5}, taper{0.25};
};

// One factor of the quantitative fragmentation construction:
//   X(x,y) = theta_j,n(x) * theta(n(y - (i/n^3) f(x))) * f(x)/n^3 * e_y.
// j == kWholeLayer drops the partition-of-unity factor (the psi_i,n layer).
struct BoufraLayerField {
  static constexpr int kWholeLayer = INT32_MIN;
  std::shared_ptr<Profile1> f;
  long long n{1};
  long long i{0};
  int j{kWholeLayer};
};

// Normal scaling around a graph curve y = g(x) (world coordinates):
//   V(p) = log(1+kappa) * phi(s) * capwin(x) * n(x),
// s = normal offset, phi(s) = s*cap(s/w) so Dxi|_N = 1+kappa on the curve.
// capwin tapers to 0 over capLen near [x0,x1] ends and inside optional
// holes (identity zones, e.g. around a periodic point).
struct NormalScalingField {
  Profile1 g;          // the curve as a graph
  double x0{-1}, x1{1};
  double kappa{0.0};
  double w{0.05};      // tube half-width (support in |s| < w)
  double capLen{0.25};
  std::vector<std::pair<double, double>> holes;  // (center x, radius)
};

using VectorField =
    std::variant<ZeroField, CoreNeutralizerField, MatrixRampField,
                 GraphShearField, BoufraLayerField, NormalScalingField>;

// Field value and spatial differential at p.
void eval_field(const VectorField& f, const Vec2& p, Vec2* v, Mat2* dv);

// Conservative bounding box outside of which the field is identically zero;
// returns false when no useful bound exists.
bool field_bbox(const VectorField& f, Vec2* lo, Vec2* hi);

}  // namespace mifs
