#include "mifs/curve.hpp"

#include <algorithm>
#include <cmath>

namespace mifs {

namespace {
std::size_t segment_of(const std::vector<double>& t, double u) {
  if (u <= t.front()) return 0;
  if (u >= t.back()) return t.size() - 2;
  auto it = std::upper_bound(t.begin(), t.end(), u);
  std::size_t i = static_cast<std::size_t>(it - t.begin());
  if (i == 0) return 0;
  return std::min(i - 1, t.size() - 2);
}
}  // namespace

Vec2 CurveSample::eval(double u) const {
  if (p.size() == 1) return p[0];
  const std::size_t i = segment_of(t, u);
  const double h = t[i + 1] - t[i];
  const double s = std::clamp((u - t[i]) / h, 0.0, 1.0);
  // Hermite with chord-scaled tangents.
  const double len = (p[i + 1] - p[i]).norm();
  const Vec2 m0 = tangent[i] * len;
  const Vec2 m1 = tangent[i + 1] * len;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p[i] + (s3 - 2 * s2 + s) * m0 +
         (-2 * s3 + 3 * s2) * p[i + 1] + (s3 - s2) * m1;
}

Vec2 CurveSample::eval_tangent(double u) const {
  if (p.size() == 1) return Vec2(1, 0);
  const std::size_t i = segment_of(t, u);
  const double h = t[i + 1] - t[i];
  const double s = std::clamp((u - t[i]) / h, 0.0, 1.0);
  const double len = (p[i + 1] - p[i]).norm();
  const Vec2 m0 = tangent[i] * len;
  const Vec2 m1 = tangent[i + 1] * len;
  const double s2 = s * s;
  Vec2 d = (6 * s2 - 6 * s) * p[i] + (3 * s2 - 4 * s + 1) * m0 +
           (-6 * s2 + 6 * s) * p[i + 1] + (3 * s2 - 2 * s) * m1;
  const double n = d.norm();
  if (n < 1e-300) return tangent[i];
  return d / n;
}

double CurveSample::distance(const Vec2& q) const {
  double u, off;
  project(q, &u, &off);
  return (eval(u) - q).norm();
}

void CurveSample::project(const Vec2& q, double* u_out, double* off_out) const {
  double best = 1e300;
  std::size_t bi = 0;
  double bs = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const Vec2 d = p[i + 1] - p[i];
    const double l2 = d.squaredNorm();
    double s = l2 > 0 ? std::clamp((q - p[i]).dot(d) / l2, 0.0, 1.0) : 0.0;
    const Vec2 c = p[i] + s * d;
    const double dist = (q - c).squaredNorm();
    if (dist < best) {
      best = dist;
      bi = i;
      bs = s;
    }
  }
  const double u = t[bi] + bs * (t[bi + 1] - t[bi]);
  const Vec2 c = eval(u);
  const Vec2 tv = eval_tangent(u);
  const Vec2 n(-tv.y(), tv.x());
  if (u_out) *u_out = u;
  if (off_out) *off_out = (q - c).dot(n);
}

double CurveSample::graph_slope_bound(
    const std::function<Vec2(const Vec2&)>& frame) const {
  double bound = 0.0;
  double prev_x = 0.0;
  bool first = true;
  Vec2 prev;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2 q = frame(p[i]);
    if (!first) {
      const double dx = q.x() - prev_x;
      if (dx <= 0.0)
        throw NotGraphRepresentable("curve is not a monotone graph in this frame");
      bound = std::max(bound, std::abs((q.y() - prev.y()) / dx));
    }
    prev_x = q.x();
    prev = q;
    first = false;
  }
  return bound;
}

CurveSample sample_curve(const std::function<Vec2(double)>& f, double a, double b,
                         int n, const std::string& id) {
  CurveSample c;
  c.id = id;
  c.t.resize(n);
  c.p.resize(n);
  c.tangent.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = a + (b - a) * i / (n - 1);
    c.t[i] = u;
    c.p[i] = f(u);
  }
  for (int i = 0; i < n; ++i) {
    Vec2 d;
    if (i == 0)
      d = c.p[1] - c.p[0];
    else if (i == n - 1)
      d = c.p[n - 1] - c.p[n - 2];
    else
      d = c.p[i + 1] - c.p[i - 1];
    const double len = d.norm();
    c.tangent[i] = len > 0 ? Vec2(d / len) : Vec2(1, 0);
  }
  return c;
}

CurveSample sample_graph(const std::function<double(double)>& g, double x0,
                         double x1, int n, const std::string& id) {
  return sample_curve([&](double x) { return Vec2(x, g(x)); }, x0, x1, n, id);
}

CurveSample sample_graph_on(const std::function<double(double)>& g,
                            const std::vector<double>& xs,
                            const std::string& id) {
  CurveSample c;
  c.id = id;
  const int n = static_cast<int>(xs.size());
  c.t = xs;
  c.p.resize(n);
  c.tangent.resize(n);
  for (int i = 0; i < n; ++i) c.p[i] = Vec2(xs[i], g(xs[i]));
  for (int i = 0; i < n; ++i) {
    Vec2 d;
    if (i == 0)
      d = c.p[1] - c.p[0];
    else if (i == n - 1)
      d = c.p[n - 1] - c.p[n - 2];
    else
      d = c.p[i + 1] - c.p[i - 1];
    const double len = d.norm();
    c.tangent[i] = len > 0 ? Vec2(d / len) : Vec2(1, 0);
  }
  return c;
}

CurveSample map_curve(const CurveSample& c,
                      const std::function<Vec2(const Vec2&)>& f,
                      const std::function<Mat2(const Vec2&)>& df,
                      const std::string& id) {
  CurveSample out;
  out.id = id.empty() ? c.id : id;
  out.t = c.t;
  out.p.resize(c.size());
  out.tangent.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out.p[i] = f(c.p[i]);
    Vec2 v = df(c.p[i]) * c.tangent[i];
    const double n = v.norm();
    out.tangent[i] = n > 0 ? Vec2(v / n) : Vec2(1, 0);
  }
  return out;
}

}  // namespace mifs
