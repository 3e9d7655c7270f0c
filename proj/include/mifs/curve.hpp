#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mifs/geometry.hpp"

namespace mifs {

// A sampled C^1 curve: parameter values with positions and unit tangents.
// Evaluation between samples is piecewise cubic Hermite in the parameter.
struct CurveSample {
  std::string id;
  std::vector<double> t;
  std::vector<Vec2> p;
  std::vector<Vec2> tangent;  // unit tangents

  std::size_t size() const { return p.size(); }
  bool empty() const { return p.empty(); }

  Vec2 front() const { return p.front(); }
  Vec2 back() const { return p.back(); }

  // Position at parameter value u (clamped to the sampled range).
  Vec2 eval(double u) const;
  Vec2 eval_tangent(double u) const;

  // Distance from q to the curve (over the sampled polyline, refined on the
  // nearest segment).
  double distance(const Vec2& q) const;
  // Parameter of the closest point and the signed normal offset of q
  // (positive on the left of the tangent).
  void project(const Vec2& q, double* u, double* signed_offset) const;

  // Largest |dy/dx| when the curve is viewed as a graph mapped through
  // `frame`; throws NotGraphRepresentable if x is not strictly monotone.
  double graph_slope_bound(const std::function<Vec2(const Vec2&)>& frame) const;
};

// Build a curve from a function [a,b] -> R^2 with n samples (uniform in the
// parameter). Tangents by analytic derivative when given, else centered
// differences.
CurveSample sample_curve(const std::function<Vec2(double)>& f, double a, double b,
                         int n, const std::string& id = "");

// Graph curve y = g(x) over [x0,x1].
CurveSample sample_graph(const std::function<double(double)>& g, double x0,
                         double x1, int n, const std::string& id = "");

// Graph curve on an explicit (possibly non-uniform) x grid.
CurveSample sample_graph_on(const std::function<double(double)>& g,
                            const std::vector<double>& xs,
                            const std::string& id = "");

// Map the curve through a pointwise map with Jacobian (for tangents).
CurveSample map_curve(const CurveSample& c,
                      const std::function<Vec2(const Vec2&)>& f,
                      const std::function<Mat2(const Vec2&)>& df,
                      const std::string& id = "");

}  // namespace mifs
