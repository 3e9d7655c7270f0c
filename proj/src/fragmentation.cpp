#include "mifs/fragmentation.hpp"

#include <algorithm>
#include <cmath>

namespace mifs {

GraphCurve GraphCurve::from_function(const std::function<double(double)>& f,
                                     const std::function<double(double)>& fd,
                                     double alpha, double delta, int n) {
  GraphCurve g;
  g.f = Profile1::from_function(f, fd, -1.0, 1.0, n);
  g.alpha = alpha;
  g.delta = delta;
  return g;
}

double GraphCurve::sampled_slope_bound(int samples) const {
  double m = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = -1.0 + 2.0 * i / (samples - 1);
    m = std::max(m, std::abs(f.eval_d(x)));
  }
  return m;
}

double boufra_support_diameter(const GraphCurve& g, long long n, long long i,
                               int j) {
  const double nn = static_cast<double>(n);
  const double n3 = nn * nn * nn;
  double xlo = -1.0, xhi = 1.0;
  if (j != BoufraLayerField::kWholeLayer) {
    xlo = std::max(xlo, (j - 2.0) / nn);
    xhi = std::min(xhi, (j + 2.0) / nn);
  }
  if (xhi <= xlo) return 0.0;
  double fmin = 1e300, fmax = -1e300;
  for (int k = 0; k <= 32; ++k) {
    const double x = xlo + (xhi - xlo) * k / 32.0;
    const double v = g.f.eval(x);
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  const double w = xhi - xlo;
  const double h = (static_cast<double>(i) / n3) * (fmax - fmin) + 4.0 / nn;
  return std::sqrt(w * w + h * h);
}

double boufra_max_support_diameter(const GraphCurve& g, long long n) {
  double m = 0.0;
  for (int j = -2; j <= static_cast<int>(n) + 2; ++j)
    m = std::max(m, boufra_support_diameter(g, n, n * n * n - 1, j));
  return m;
}

namespace {

// K' calibration: measured once on a fixed probe, cached per process.
double boufra_kprime() {
  static double kp = [] {
    GraphCurve probe = GraphCurve::from_function(
        [](double x) {
          const double u = 1.0 - x * x;
          return 0.3 * u * u * u;
        },
        [](double x) {
          const double u = 1.0 - x * x;
          return 0.3 * 3.0 * u * u * (-2.0 * x);
        },
        0.9, 0.05, 2049);
    const long long n = 12;
    auto fp = std::make_shared<Profile1>(probe.f);
    double worst = 0.0;
    Rng rng(7);
    for (int trial = 0; trial < 64; ++trial) {
      BoufraLayerField field;
      field.f = fp;
      field.n = n;
      field.i = static_cast<long long>(rng.next_double() * (n * n * n - 1));
      field.j = static_cast<int>(rng.next_double() * (n + 5)) - 2;
      BumpFlow bf;
      bf.field = field;
      bf.integrationSteps = 8;
      Vec2 lo, hi;
      field_bbox(field, &lo, &hi);
      double c1 = 0.0;
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          const Vec2 p(lo.x() + (hi.x() - lo.x()) * (a + 0.5) / 6,
                       lo.y() + (hi.y() - lo.y()) * (b + 0.5) / 6);
          Mat2 J;
          flow_time1(field, p, 8, 1.0, &J);
          c1 = std::max(c1, op_norm(J - Mat2::Identity()));
        }
      }
      worst = std::max(worst, c1);
    }
    return worst * static_cast<double>(n) / (1.0 + 0.9);
  }();
  return kp;
}

}  // namespace

double boufra_c1_bound(double alpha, long long n) {
  return boufra_kprime() * (1.0 + alpha) / static_cast<double>(n);
}

SmallDiffeo CostCertificate::factor(long long idx) const {
  if (!lazy()) {
    return factors.at(static_cast<std::size_t>(idx));
  }
  const long long js = n + 5;
  const long long i = idx / js;
  const int j = static_cast<int>(idx % js) - 2;
  BoufraLayerField field;
  field.f = f;
  field.n = n;
  field.i = i;
  field.j = j;
  SmallDiffeo d;
  BumpFlow bf;
  bf.field = field;
  bf.integrationSteps = 8;
  d.chain = MapChain::of(bf);
  Vec2 lo, hi;
  field_bbox(field, &lo, &hi);
  d.supportDisc.center = 0.5 * (lo + hi);
  d.supportDisc.radius = 0.5 * (hi - lo).norm();
  d.c1Bound = boufra_c1_bound(1.0, n);
  GraphCurve g;
  g.f = *f;
  d.supportDiameter = boufra_support_diameter(g, n, i, j);
  return d;
}

CostCertificate fragment_graph(const GraphCurve& g, double eta) {
  CostCertificate cert;
  cert.eta = eta;
  const double alpha = std::max(g.alpha, g.sampled_slope_bound(4096));
  const double fmax = g.f.max_abs();
  if (fmax < 1e-15) {
    cert.K = 0;
    return cert;  // the graph is the axis
  }
  long long n = std::max<long long>(3, static_cast<long long>(std::ceil(4.0 / eta)));
  while (boufra_max_support_diameter(g, n) > eta ||
         boufra_c1_bound(alpha, n) > eta) {
    ++n;
    if (n > 4000) throw DomainError("fragmentation index diverged");
  }
  cert.n = n;
  cert.f = std::make_shared<Profile1>(g.f);
  cert.K = n * n * n * (n + 5);

  // Composition residual: ladder points (x, (i/n^3) f(x)) ride inside the
  // theta == 1 tube where the field is constant in y, so each layer advances
  // the height by exactly f(x)/n^3 (RK4 is exact on a constant field). The
  // fold below reproduces the floating-point accumulation and verifies the
  // tube inequality |f(x)|/n^2 <= 1 per layer.
  const double n3 = static_cast<double>(n) * n * n;
  double worst = 0.0;
  for (int s = 0; s < 2000; ++s) {
    const double x = -1.0 + 2.0 * (s + 0.5) / 2000.0;
    const double fx = g.f.eval(x);
    if (std::abs(fx) / (n3 / static_cast<double>(n)) > 1.0)
      throw DomainError("tube invariant violated");
    double y = 0.0;
    const double step = fx / n3;
    for (long long i = 0; i < n * n * n; ++i) y += step;
    worst = std::max(worst, std::abs(y - fx));
  }
  cert.compositionError = worst;
  return cert;
}

// --- Zig-zag curves ----------------------------------------------------------

namespace {

// Piecewise-linear route through waypoints with quadratic-Bezier corner
// rounding, sampled densely per segment.
CurveSample route_curve(const std::vector<Vec2>& wp, int perSegment,
                        const std::string& id,
                        const std::vector<double>& maxCut = {}) {
  std::vector<Vec2> pts;
  const double blend = 0.18;  // corner blend fraction of the shorter side
  // absolute cut length at each interior corner
  std::vector<double> cut(wp.size(), 0.0);
  for (std::size_t s = 1; s + 1 < wp.size(); ++s) {
    cut[s] = blend * std::min((wp[s] - wp[s - 1]).norm(),
                              (wp[s + 1] - wp[s]).norm());
    if (s < maxCut.size() && maxCut[s] > 0.0)
      cut[s] = std::min(cut[s], maxCut[s]);
  }
  for (std::size_t s = 0; s + 1 < wp.size(); ++s) {
    const Vec2 a = wp[s], b = wp[s + 1];
    const Vec2 dir = (b - a) / std::max(1e-300, (b - a).norm());
    const Vec2 p0 = a + cut[s] * dir;
    const Vec2 p1 = b - cut[s + 1] * dir;
    for (int i = 0; i < perSegment; ++i) {
      const double t = static_cast<double>(i) / perSegment;
      pts.push_back(p0 + t * (p1 - p0));
    }
    if (s + 2 < wp.size()) {
      // quadratic Bezier around the corner at b
      const Vec2 c = wp[s + 2];
      const Vec2 dir2 = (c - b) / std::max(1e-300, (c - b).norm());
      const Vec2 q0 = b - cut[s + 1] * dir;
      const Vec2 q1 = b + cut[s + 1] * dir2;
      for (int i = 0; i < perSegment / 2; ++i) {
        const double t = static_cast<double>(i) / (perSegment / 2);
        pts.push_back((1 - t) * (1 - t) * q0 + 2 * t * (1 - t) * b + t * t * q1);
      }
    }
  }
  pts.push_back(wp.back());
  CurveSample c;
  c.id = id;
  c.t.resize(pts.size());
  c.p = pts;
  c.tangent.resize(pts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) acc += (pts[i] - pts[i - 1]).norm();
    c.t[i] = acc;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec2 d;
    if (i == 0)
      d = pts[1] - pts[0];
    else if (i + 1 == pts.size())
      d = pts[i] - pts[i - 1];
    else
      d = pts[i + 1] - pts[i - 1];
    const double nn = d.norm();
    c.tangent[i] = nn > 0 ? Vec2(d / nn) : Vec2(1, 0);
  }
  return c;
}

}  // namespace

ZetaReport build_zeta_curves(const PreparedFamily& family, int memberIndex,
                             int iMax) {
  ZetaReport rep;
  const double lam = family.params.lambda;
  const double s = family.scaleOf(memberIndex);
  const MapChain F = family.memberReturnMap(memberIndex);
  const double isq = 1.0 / std::sqrt(2.0);

  // Rectangle data in world units for clause checks.
  struct RectWorld {
    double xmin, xmax, ymax;  // |y| <= ymax (sampled for k >= 1)
    int k;
  };
  std::vector<RectWorld> rects;
  const RectSpec r0 = family.params.betaRects.front();
  for (int k = 0; k <= iMax + 2; ++k) {
    RectWorld rw;
    rw.k = k;
    rw.xmin = r0.xmin * s * std::pow(lam, k);
    rw.xmax = r0.xmax * s * std::pow(lam, k);
    // y extent under k pushes of the corner points.
    double ym = 0.0;
    for (int e = 0; e < 16; ++e) {
      Point2 p(r0.xmin * s + (r0.xmax - r0.xmin) * s * e / 15.0, r0.ymax * s);
      for (int j = 0; j < k; ++j) p = apply(F, p);
      ym = std::max(ym, std::abs(p.y()));
    }
    rw.ymax = k == 0 ? r0.ymax * s : ym;
    rects.push_back(rw);
  }
  // Vertical corridor check: consecutive rectangles must leave an x-gap.
  for (int k = 0; k + 1 <= iMax + 2; ++k) {
    if (rects[k + 1].xmax >= rects[k].xmin)
      throw GeometryInfeasible("beta rectangles leave no vertical corridor");
  }

  rep.zetaMinusInf = sample_curve(
      [&](double u) { return Vec2(u * s * isq, u * s * isq); }, -1.0, 1.0, 513,
      "zeta_-inf");

  double maxRectY = 0.0;
  for (const auto& rw : rects) maxRectY = std::max(maxRectY, rw.ymax);
  const double hTop = std::max(1.25 * maxRectY, 0.22 * s);

  double alphaRot = 0.0;
  for (int i = 0; i <= iMax; ++i) {
    std::vector<Vec2> wp;
    wp.push_back(Vec2(-s * isq, -s * isq));
    wp.push_back(Vec2(-0.45 * s * isq, -0.45 * s * isq));
    wp.push_back(Vec2(-0.2 * s, 0.0));
    // vertical climb inside the corridor between beta_i and beta_{i-1},
    // then a straight leg to the diagonal above every rectangle
    const double xc =
        i == 0 ? 0.96 * s : 0.5 * (rects[i].xmax + rects[i - 1].xmin);
    const double corridorHalf = i == 0
        ? (xc - rects[0].xmax) * 0.45
        : (rects[i - 1].xmin - rects[i].xmax) * 0.4;
    wp.push_back(Vec2(xc, 0.0));
    wp.push_back(Vec2(xc, hTop));
    const double g = i == 0 ? 0.66 * s : (i == 1 ? 0.5 * s : 0.42 * s);
    wp.push_back(Vec2(g, g));
    wp.push_back(Vec2(s * isq, s * isq));
    std::vector<double> caps(wp.size(), 0.0);
    caps[3] = corridorHalf;  // corner entering the vertical climb
    caps[4] = corridorHalf;  // corner leaving it
    CurveSample z = route_curve(wp, 192, "zeta_" + std::to_string(i), caps);
    alphaRot = std::max(alphaRot, z.graph_slope_bound(
                                      [](const Vec2& p) { return to_diag_frame(p); }));
    // clause checks
    auto inRect = [&](const RectWorld& rw, const Vec2& p) {
      return p.x() >= rw.xmin && p.x() <= rw.xmax && std::abs(p.y()) <= rw.ymax;
    };
    for (int k = 0; k <= iMax; ++k) {
      bool touches = false;
      bool offAxisInside = false;
      for (const auto& p : z.p) {
        if (inRect(rects[k], p)) {
          touches = true;
          if (std::abs(p.y()) > 1e-9 * s) offAxisInside = true;
        }
      }
      if (k < i && touches) {
        rep.clausesPass = false;
        rep.clauseFailures.push_back("zeta_" + std::to_string(i) +
                                     " touches beta_" + std::to_string(k));
      }
      if (k >= i && (!touches || offAxisInside)) {
        rep.clausesPass = false;
        rep.clauseFailures.push_back("zeta_" + std::to_string(i) +
                                     " not axis-only inside beta_" +
                                     std::to_string(k));
      }
    }
    rep.curves.push_back(std::move(z));
  }
  rep.alphaRotated = alphaRot;
  return rep;
}

// --- gamma curves ------------------------------------------------------------

CurveSample gamma_zero(const PreparedFamily& family) {
  const Round xi = family.params.xiDisc;
  return sample_curve(
      [&](double u) { return Vec2(xi.center.x() + u * xi.radius, 0.0); }, -1.0,
      1.0, 1025, "gamma_0");
}

namespace {

// Piecewise-analytic dodge profile w(x) for the alpha curve in D_q.
struct AlphaProfile {
  struct Bump {
    double x0, x1, x2, x3;  // up-ramp [x0,x1], plateau [x1,x2], down [x2,x3]
    double h;
  };
  std::vector<Bump> bumps;
  double riseX0{0}, riseX1{0};
  double descX0{0}, descX1{0};
  double Yt{0};
  bool hasDetour{false};

  double eval(double x) const {
    if (hasDetour) {
      if (x >= riseX0 && x < riseX1)
        return Yt * smoothstep((x - riseX0) / (riseX1 - riseX0));
      if (x >= riseX1 && x < descX0) return Yt;
      if (x >= descX0 && x < descX1) {
        // near-linear ramp with C^1 ends
        const double t = (x - descX0) / (descX1 - descX0);
        return Yt * (1.0 - ramp(t));
      }
    }
    for (const auto& b : bumps) {
      if (x < b.x0 || x > b.x3) continue;
      if (x < b.x1) return b.h * smoothstep((x - b.x0) / (b.x1 - b.x0));
      if (x <= b.x2) return b.h;
      return b.h * (1.0 - ramp((x - b.x2) / (b.x3 - b.x2)));
    }
    return 0.0;
  }

  // Gentle ramp: linear with quadratic-smoothed ends, max slope ~ 1.1/width.
  static double ramp(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    const double e = 0.12;
    if (t < e) return 0.5 * t * t / e / (1.0 - e);
    if (t > 1.0 - e)
      return 1.0 - 0.5 * (1.0 - t) * (1.0 - t) / e / (1.0 - e);
    return (t - 0.5 * e) / (1.0 - e);
  }
};

void well_extents(const PreparedFamily& family, int n, int m,
                  std::vector<double>* wx0, std::vector<double>* wx1,
                  std::vector<double>* wy) {
  const MapChain F = family.memberReturnMap(n);
  const MapChain& wellMap = family.base.branches[family.wellBranch].map;
  wx0->assign(m + 1, 0.0);
  wx1->assign(m + 1, 0.0);
  wy->assign(m + 1, 0.0);
  std::vector<Point2> bd;
  for (int i = 0; i < 96; ++i) {
    const double a = 2.0 * M_PI * (i + 0.5) / 96;
    bd.push_back(apply(wellMap, Vec2(std::cos(a), std::sin(a))));
  }
  for (int j = 0; j <= m; ++j) {
    double x0 = 1e300, x1 = -1e300, ym = 0.0;
    for (auto& p : bd) {
      x0 = std::min(x0, p.x());
      x1 = std::max(x1, p.x());
      ym = std::max(ym, std::abs(p.y()));
    }
    (*wx0)[j] = x0;
    (*wx1)[j] = x1;
    (*wy)[j] = ym;
    if (j < m)
      for (auto& p : bd) p = apply(F, p);
  }
}

AlphaProfile make_alpha_profile(const PreparedFamily& family, int n, int m,
                                const std::vector<double>& wx0,
                                const std::vector<double>& wx1,
                                const std::vector<double>& wy) {
  const int tauN = family.tauOf(n);
  const double s = family.scaleOf(n);
  AlphaProfile prof;
  const int Jb = std::min(tauN, m - 2);  // wells dodged by bumps
  for (int j = 0; j <= Jb; ++j) {
    AlphaProfile::Bump b;
    const double ww = wx1[j] - wx0[j];
    b.x1 = wx0[j] - 0.15 * ww;
    b.x2 = wx1[j] + 0.15 * ww;
    b.x0 = b.x1 - 1.7 * ww;   // gentle up-ramp
    b.x3 = b.x2 + 4.25 * ww;  // gentler down-ramp (rotated-frame slope)
    // the outermost tail must die before the boundary collar; deeper tails
    // before the previous bump support
    const double cap3 =
        j == 0 ? 0.955 : prof.bumps[j - 1].x0 * 0.99;
    b.x3 = std::min(b.x3, cap3);
    if (b.x3 - b.x2 < 0.8 * ww)
      throw GeometryInfeasible("no room for the dodge bump tail");
    b.h = 1.5 * wy[j];
    prof.bumps.push_back(b);
  }
  for (std::size_t k = 0; k + 1 < prof.bumps.size(); ++k) {
    if (prof.bumps[k + 1].x3 >= prof.bumps[k].x0)
      throw GeometryInfeasible("dodge bump supports overlap");
  }
  if (m - 1 > Jb) {
    prof.hasDetour = true;
    double deepY = 0.0;
    for (int j = Jb + 1; j < m; ++j) deepY = std::max(deepY, wy[j]);
    prof.Yt = std::max(2.2 * deepY, 1e-4 * s);
    // Rise inside the corridor between wells m and m-1, outside the image
    // disc LambdaBar_m so that gamma meets T_m exactly along the axis, at a
    // fixed steep slope (keeps the rotated-frame slope depth-independent).
    const double kRiseSlope = 2000.0;
    const double lamM = std::pow(family.params.lambda, m);
    const double gLo = std::max(wx1[m] * 1.02, lamM * 1.008);
    const double gHi = wx0[m - 1] * 0.98;
    const double riseW = prof.Yt / kRiseSlope;
    if (gHi - gLo < 2.0 * riseW)
      throw DepthInfeasible("corridor too narrow for the fixed-slope rise");
    const double mid = 0.5 * (gLo + gHi);
    prof.riseX0 = mid - 0.5 * riseW;
    prof.riseX1 = mid + 0.5 * riseW;
    // Descent lands just left of the deepest bump support.
    prof.descX1 = prof.bumps.back().x0 * 0.98;
    prof.descX0 = prof.descX1 - 2.8 * prof.Yt;
    if (prof.descX0 < prof.riseX1 * 1.5)
      throw DepthInfeasible("detour does not fit between corridor and bumps");
  }
  return prof;
}

std::vector<double> make_alpha_grid(const AlphaProfile& prof, double lam) {
  std::vector<double> xs;
  auto push_range = [&](double a, double b, int k) {
    if (b <= a) return;
    for (int i = 0; i <= k; ++i) xs.push_back(a + (b - a) * i / k);
  };
  push_range(-0.999, 0.0, 96);
  // two-sided logarithmic cluster at the origin: the image of this point is
  // the common center of every T well, where the family's anchors live
  for (double a = 0.05; a > 1e-12; a *= 0.45) {
    xs.push_back(a);
    xs.push_back(-a);
  }
  xs.push_back(0.0);
  if (prof.hasDetour) {
    push_range(0.0, prof.riseX0, 48);
    push_range(prof.riseX0, prof.riseX1, 48);
    for (double a = prof.riseX1; a < prof.descX0; a /= lam)
      push_range(a, std::min(a / lam, prof.descX0), 24);
    push_range(prof.descX0, prof.descX1, 64);
  } else {
    push_range(0.0, prof.bumps.back().x0, 64);
  }
  for (int k = static_cast<int>(prof.bumps.size()) - 1; k >= 0; --k) {
    const auto& b = prof.bumps[k];
    push_range(b.x0 * 0.995, b.x3 * 1.005, 128);
    const double nextX = k > 0 ? prof.bumps[k - 1].x0 : 0.999;
    push_range(b.x3 * 1.005, nextX, 16);
  }
  xs.push_back(0.999);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-18; }),
           xs.end());
  return xs;
}

}  // namespace

std::vector<double> alpha_grid(const PreparedFamily& family, int n, int m) {
  std::vector<double> wx0, wx1, wy;
  well_extents(family, n, m, &wx0, &wx1, &wy);
  return make_alpha_grid(make_alpha_profile(family, n, m, wx0, wx1, wy),
                         family.params.lambda);
}

GammaReport build_gamma_family(const PreparedFamily& family,
                               const WellSystem& ws, int n, int m) {
  GammaReport rep;
  const double lam = family.params.lambda;
  if (m < family.tauOf(n) + 3)
    throw DepthInfeasible("depth below the feasible minimum for this member");
  const MapChain F = family.memberReturnMap(n);
  const MapChain& wellMap = family.base.branches[family.wellBranch].map;

  // Per-level extents of the pushed well.
  std::vector<double> wx0, wx1, wy;
  well_extents(family, n, m, &wx0, &wx1, &wy);

  AlphaProfile prof = make_alpha_profile(family, n, m, wx0, wx1, wy);

  // Clearance check: the profile must clear every well and Delta iterate.
  // (The wells sit on the axis; Delta iterates below it.)
  for (int j = 0; j < m; ++j) {
    for (int e = 0; e < 24; ++e) {
      const double x = wx0[j] + (wx1[j] - wx0[j]) * e / 23.0;
      if (prof.eval(x) <= wy[j])
        throw GeometryInfeasible("alpha profile does not clear well " +
                                 std::to_string(j));
    }
  }

  // Piece-driven multi-scale sampling grid.
  std::vector<double> xs = make_alpha_grid(prof, lam);
  CurveSample alpha = sample_graph_on([&](double x) { return prof.eval(x); }, xs,
                                      "alpha_" + std::to_string(n) + "_" +
                                          std::to_string(m));
  rep.alphaCurve = alpha;

  // gamma = wellMap(alpha).
  rep.gamma = map_curve(
      alpha, [&](const Vec2& p) { return apply(wellMap, p); },
      [&](const Vec2& p) { return jacobian(wellMap, p); },
      "gamma_" + std::to_string(n) + "_" + std::to_string(m));

  // --- bullet verification ---------------------------------------------------
  const Round xi = family.params.xiDisc;
  // (i) coincides with gamma_0 near the boundary of Xi_1.
  for (const auto& p : rep.gamma.p) {
    const double rr = (p - xi.center).norm();
    if (rr > 0.97 * xi.radius && std::abs(p.y() - xi.center.y()) > 1e-12)
      rep.coincidesNearBoundary = false;
  }
  // (ii) gamma cap T_m equals the pushed-forward strong stable manifold.
  {
    MarkovIfs mem = family.member(n);
    auto orb = find_periodic(mem, Word{{family.periodicBranch}});
    CurveSample wss = strong_stable_local(mem, *orb, 0.999, 1025);
    // push: F^m then the well map (a = 0 scenarios; general via ws.idx).
    CurveSample pushed = wss;
    for (int j = 0; j < m; ++j)
      pushed = map_curve(pushed, [&](const Vec2& p) { return apply(F, p); },
                         [&](const Vec2& p) { return jacobian(F, p); });
    pushed = map_curve(pushed, [&](const Vec2& p) { return apply(wellMap, p); },
                       [&](const Vec2& p) { return jacobian(wellMap, p); });
    double sup = 0.0;
    int used = 0;
    for (const auto& p : rep.gamma.p) {
      if (!membership(ws, WellSet::T, m, p)) continue;
      sup = std::max(sup, pushed.distance(p));
      ++used;
    }
    rep.tailSupDistance = sup;
    rep.tailMatchesPushforward = used > 4 && sup < tol::kS5Sup;
  }
  // (iii) gamma cap Xi_i connected, disjoint from Theta_i.
  for (int i = 1; i <= ws.idx.t; ++i) {
    int runs = 0;
    bool prev = false;
    for (const auto& p : rep.gamma.p) {
      const bool in = membership(ws, WellSet::Xi, i, p);
      if (in && !prev) ++runs;
      prev = in;
    }
    if (runs > 1) rep.xiConnectedThetaDisjoint = false;
    if (i < ws.idx.t) {
      for (const auto& p : rep.gamma.p)
        if (membership(ws, WellSet::Theta, i, p))
          rep.xiConnectedThetaDisjoint = false;
    }
  }
  // (iv) gamma cap T_i connected and disjoint from S_i for i < m.
  for (int i = 0; i < m; ++i) {
    int runs = 0;
    bool prev = false;
    for (const auto& p : rep.gamma.p) {
      const bool in = membership(ws, WellSet::T, i, p);
      if (in && !prev) ++runs;
      prev = in;
    }
    if (runs > 1) rep.tConnectedSDisjoint = false;
    for (const auto& p : rep.gamma.p)
      if (membership(ws, WellSet::S, i, p)) rep.tConnectedSDisjoint = false;
  }
  return rep;
}

// --- eta cost ----------------------------------------------------------------

namespace {

struct Frame {
  bool rotated{false};
  Vec2 center{0, 0};
  Vec2 to(const Vec2& p) const {
    return rotated ? to_diag_frame(p - center) : Vec2(p - center);
  }
};

bool graph_in_frame(const CurveSample& c, const Frame& fr, double* slope) {
  try {
    *slope = c.graph_slope_bound([&](const Vec2& p) { return fr.to(p); });
    return true;
  } catch (const NotGraphRepresentable&) {
    return false;
  }
}

}  // namespace

CostCertificate eta_cost(const CurveSample& source, const CurveSample& target,
                         const Round& container, double eta) {
  CostCertificate cert;
  cert.eta = eta;
  // Pick the admitted frame with the smallest graph-slope bound.
  Frame fr;
  fr.center = container.center;
  bool found = false;
  double bestSlope = 1e300;
  bool bestRot = false;
  for (bool rot : {false, true}) {
    Frame cand;
    cand.center = container.center;
    cand.rotated = rot;
    double s0 = 0, s1 = 0;
    if (graph_in_frame(source, cand, &s0) && graph_in_frame(target, cand, &s1)) {
      found = true;
      const double slope = std::max(s0, s1);
      if (slope < bestSlope) {
        bestSlope = slope;
        bestRot = rot;
      }
    }
  }
  if (!found)
    throw NotGraphRepresentable(
        "curves are not monotone graphs in any admitted frame");
  fr.rotated = bestRot;

  // Difference profile on the source's x' grid.
  std::vector<double> xs;
  std::vector<double> g0v, g1v;
  for (std::size_t i = 0; i < source.size(); ++i)
    xs.push_back(fr.to(source.p[i]).x());
  // target as a function of x': piecewise-linear interpolation on its frame.
  std::vector<double> tx, ty;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const Vec2 q = fr.to(target.p[i]);
    tx.push_back(q.x());
    ty.push_back(q.y());
  }
  auto target_at = [&](double x) {
    auto it = std::lower_bound(tx.begin(), tx.end(), x);
    if (it == tx.begin()) return ty.front();
    if (it == tx.end()) return ty.back();
    const std::size_t k = static_cast<std::size_t>(it - tx.begin());
    const double w = (x - tx[k - 1]) / (tx[k] - tx[k - 1]);
    return ty[k - 1] * (1 - w) + ty[k] * w;
  };
  Profile1 diff;
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec2 q = fr.to(source.p[i]);
    const double d = target_at(q.x()) - q.y();
    diff.x.push_back(q.x());
    diff.y.push_back(d);
    lo = std::min(lo, std::min(q.y(), q.y() + d));
    hi = std::max(hi, std::max(q.y(), q.y() + d));
  }
  diff.dy.resize(diff.x.size(), 0.0);
  for (std::size_t i = 0; i < diff.x.size(); ++i) {
    if (i == 0)
      diff.dy[i] = (diff.y[1] - diff.y[0]) / (diff.x[1] - diff.x[0]);
    else if (i + 1 == diff.x.size())
      diff.dy[i] = (diff.y[i] - diff.y[i - 1]) / (diff.x[i] - diff.x[i - 1]);
    else
      diff.dy[i] = (diff.y[i + 1] - diff.y[i - 1]) / (diff.x[i + 1] - diff.x[i - 1]);
  }
  const double wmax = diff.max_abs();
  double wslope = diff.max_abs_d();
  if (wmax < 1e-13 && wslope < 1e-11) {
    cert.K = 0;
    cert.compositionError = wmax;
    return cert;
  }
  // Quantize the slope before the count so self-similar families land on the
  // same K regardless of sampling noise.
  wslope = std::ceil(wslope / 0.05) * 0.05;
  long long c = std::max<long long>(
      1, static_cast<long long>(std::ceil(wslope * 1.15 / eta)));

  for (int attempt = 0; attempt < 8; ++attempt) {
    cert.factors.clear();
    Profile1 step = diff;
    for (auto& v : step.y) v /= static_cast<double>(c);
    for (auto& v : step.dy) v /= static_cast<double>(c);
    GraphShearField field;
    field.center = fr.center;
    field.rotated45 = fr.rotated;
    field.d = step;
    field.winLo = lo - 0.02 * container.radius;
    field.winHi = hi + 0.02 * container.radius;
    field.taper = 0.3 * container.radius;
    BumpFlow bf;
    bf.field = field;
    bf.integrationSteps = 32;
    SmallDiffeo sd;
    sd.chain = MapChain::of(bf);
    Vec2 blo, bhi;
    field_bbox(field, &blo, &bhi);
    sd.supportDisc.center = 0.5 * (blo + bhi);
    sd.supportDisc.radius = 0.5 * (bhi - blo).norm();
    // sampled C1 distance of the factor
    double c1 = 0.0;
    for (int a = 0; a < 24; ++a) {
      for (int b = 0; b < 24; ++b) {
        const double xq = blo.x() + (bhi.x() - blo.x()) * (a + 0.5) / 24;
        const double yq = blo.y() + (bhi.y() - blo.y()) * (b + 0.5) / 24;
        Mat2 J;
        flow_time1(field, Vec2(xq, yq), 32, 1.0, &J);
        c1 = std::max(c1, op_norm(J - Mat2::Identity()));
      }
    }
    sd.c1Bound = c1;
    sd.supportDiameter = 2.0 * sd.supportDisc.radius;
    if (c1 <= eta * 0.999) {
      cert.K = c;
      for (long long k = 0; k < c; ++k) cert.factors.push_back(sd);
      break;
    }
    c = c + std::max<long long>(1, c / 8);
  }
  if (cert.K == 0) throw DomainError("transport factors failed the eta bound");

  // Composition residual over the source samples.
  double worst = 0.0;
  for (std::size_t i = 0; i < source.size(); i += std::max<std::size_t>(1, source.size() / 2000)) {
    Point2 p = source.p[i];
    for (long long k = 0; k < cert.K; ++k) p = apply(cert.factors[0].chain, p);
    worst = std::max(worst, target.distance(p));
  }
  cert.compositionError = worst;
  return cert;
}

}  // namespace mifs
