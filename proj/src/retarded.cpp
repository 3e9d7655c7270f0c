#include "mifs/retarded.hpp"

#include <cmath>

namespace mifs {

namespace {

VectorField rescale_field(const VectorField& f, double s) {
  if (std::holds_alternative<ZeroField>(f)) return f;
  if (const auto* c = std::get_if<CoreNeutralizerField>(&f)) {
    CoreNeutralizerField out = *c;
    out.scale *= s;
    return out;
  }
  if (const auto* r = std::get_if<MatrixRampField>(&f)) {
    MatrixRampField out = *r;
    out.rIn *= s;
    out.rOut *= s;
    out.center *= s;
    return out;
  }
  if (const auto* g = std::get_if<GraphShearField>(&f)) {
    GraphShearField out = *g;
    out.center *= s;
    for (auto& x : out.d.x) x *= s;
    for (auto& y : out.d.y) y *= s;
    out.winLo *= s;
    out.winHi *= s;
    out.taper *= s;
    return out;
  }
  if (const auto* ns = std::get_if<NormalScalingField>(&f)) {
    NormalScalingField out = *ns;
    for (auto& x : out.g.x) x *= s;
    for (auto& y : out.g.y) y *= s;
    out.x0 *= s;
    out.x1 *= s;
    out.w *= s;
    out.capLen *= s;
    for (auto& h : out.holes) {
      h.first *= s;
      h.second *= s;
    }
    return out;
  }
  throw DomainError("field kind cannot be rescaled");
}

}  // namespace

Primitive rescale_primitive(const Primitive& prim, double s) {
  return std::visit(
      [&](const auto& pr) -> Primitive {
        using T = std::decay_t<decltype(pr)>;
        if constexpr (std::is_same_v<T, Affine>) {
          Affine out = pr;
          out.offset *= s;
          return out;
        } else if constexpr (std::is_same_v<T, Homothety>) {
          Homothety out = pr;
          out.center *= s;
          return out;
        } else if constexpr (std::is_same_v<T, DiagonalSaddleNode>) {
          DiagonalSaddleNode out = pr;
          out.k.a /= s * s;
          out.k.ycap *= s;
          return out;
        } else if constexpr (std::is_same_v<T, BumpFlow>) {
          BumpFlow out = pr;
          out.field = rescale_field(pr.field, s);
          return out;
        } else {
          NormalScalingFlowPrim out = pr;
          VectorField v = rescale_field(VectorField(pr.field), s);
          out.field = std::get<NormalScalingField>(v);
          return out;
        }
      },
      prim);
}

MapChain RetardedFamily::member(int m) const {
  if (m < m0) throw DomainError("member index below m0");
  const double s = std::pow(lambda, m - m0);
  MapChain c;
  // core = [Homothety(lambda), flows...]; member(m) keeps the homothety and
  // rescales the flows, which reproduces H_{lambda^{m-m0}} core H^{-1} on the
  // core region and H_lambda on the homothetic region.
  c.primitives.push_back(core.primitives.front());
  for (std::size_t i = 1; i < core.primitives.size(); ++i)
    c.primitives.push_back(rescale_primitive(core.primitives[i], s));
  return c;
}

RetardedFamily build_retarded(const MapChain& core, double lambda, double R,
                              int m0) {
  if (core.primitives.empty())
    throw GluingMismatch("core must start with the homothety H_lambda");
  const auto* h = std::get_if<Homothety>(&core.primitives.front());
  if (!h || std::abs(h->factor - lambda) > 1e-14 || h->center.norm() > 0)
    throw GluingMismatch("core must start with the homothety H_lambda");
  // Homothetic collar: the core must coincide with H_lambda near the outer
  // boundary of its region B(lambda^{m0} R).
  const double rc = std::pow(lambda, m0) * R;
  double sup = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * M_PI * i / 64;
    for (double f : {0.97, 0.99, 1.0}) {
      const Point2 p = rc * f * Vec2(std::cos(a), std::sin(a));
      sup = std::max(sup, (apply(core, p) - lambda * p).norm());
    }
  }
  if (sup > 1e-12)
    throw GluingMismatch("core is not homothetic near its outer boundary");
  RetardedFamily fam;
  fam.core = core;
  fam.lambda = lambda;
  fam.R = R;
  fam.m0 = m0;
  return fam;
}

MapChain PreparedFamily::memberReturnMap(int n) const {
  MapChain c;
  Homothety h;
  h.factor = params.lambda;
  c.primitives.push_back(h);
  CoreNeutralizerField f;
  f.lambda = params.lambda;
  f.scale = scaleOf(n);
  f.u1r = params.core.u1r;
  f.u2r = params.core.u2r;
  f.v0r = params.core.v0r;
  BumpFlow bf;
  bf.field = f;
  bf.integrationSteps = params.core.integrationSteps;
  c.primitives.push_back(bf);
  return c;
}

MarkovIfs PreparedFamily::member(int n) const {
  MarkovIfs out = base;
  out.branches[periodicBranch].map = memberReturnMap(n);
  return out;
}

PreparedFamily build_prepared(const PreparedParams& params) {
  // Internal consistency of the parameter block.
  if (params.lambda <= 0.0 || params.lambda >= 1.0)
    throw ConstraintViolation("P1: homothetic factor must be in (0,1)");
  if (params.lambdas.size() < 2 || params.lambdas.front() != 1.0 ||
      std::abs(params.lambdas.back() - params.lambda) > 1e-14)
    throw ConstraintViolation("P1: lambda ladder must run from 1 to lambda");
  const std::size_t pi = params.lambdas.size() - 1;
  if (params.lambdaStars.size() != pi)
    throw ConstraintViolation("P3: one lambda* per annulus required");
  for (std::size_t i = 0; i < pi; ++i) {
    if (!(params.lambdas[i + 1] < params.lambdaStars[i] &&
          params.lambdaStars[i] < params.lambdas[i]))
      throw ConstraintViolation("P3: lambda* outside its annulus");
  }
  if (params.betaRects.size() != pi)
    throw ConstraintViolation("P2: one beta rectangle per annulus required");
  // P3-3: Xi_1 is a round disc centered on the x-axis, off the diagonal.
  if (std::abs(params.xiDisc.center.y()) > 1e-12)
    throw ConstraintViolation("P3-3: Xi_1 center must lie on the x-axis");
  if (std::abs(params.xiDisc.center.x() - params.xiDisc.center.y()) / std::sqrt(2.0) <=
      params.xiDisc.radius)
    throw ConstraintViolation("P3-3: Xi_1 must avoid the line {x=y}");
  for (const auto& d : params.deltaDiscs) {
    if (std::abs(d.center.y()) <= d.radius)
      throw ConstraintViolation("P3-2: obstruction disc touches the x-axis");
    if (std::abs(d.center.x() - d.center.y()) / std::sqrt(2.0) <= d.radius)
      throw ConstraintViolation("P3-2: obstruction disc touches {x=y}");
  }

  PreparedFamily fam;
  fam.params = params;
  MarkovIfs ifs;
  Disc dq;
  dq.shape = Round{Vec2(0, 0), 1.0};
  ifs.discs.push_back(dq);

  Branch periodic;
  periodic.dom = 0;
  periodic.target = 0;
  ifs.branches.push_back(periodic);  // map installed per member
  fam.periodicBranch = 0;

  Branch well;
  well.dom = 0;
  well.target = 0;
  Affine wa;
  wa.matrix = params.xiDisc.radius * Mat2::Identity();
  wa.offset = params.xiDisc.center;
  well.map = MapChain::of(wa);
  ifs.branches.push_back(well);
  fam.wellBranch = 1;

  for (const auto& d : params.deltaDiscs) {
    Branch ob;
    ob.dom = 0;
    ob.target = 0;
    Affine oa;
    oa.matrix = d.radius * Mat2::Identity();
    oa.offset = d.center;
    ob.map = MapChain::of(oa);
    fam.obstructionBranches.push_back(static_cast<int>(ifs.branches.size()));
    ifs.branches.push_back(ob);
  }

  fam.base = std::move(ifs);
  fam.qDisc = 0;
  fam.homoclinicWord = Word{{fam.wellBranch}};
  fam.homoclinicPoint = params.xiDisc.center;
  // Install a placeholder periodic map so the base itself is a valid IFS.
  fam.base.branches[fam.periodicBranch].map = fam.memberReturnMap(1);
  return fam;
}

std::vector<MarkovIfs> build_saddle_node_family(const PreparedFamily& family,
                                                const FlexiblePath& path,
                                                int mLo, int mHi) {
  const FlexibilityReport fr = validate_flexible(path);
  if (!fr.pass(path.epsilon))
    throw DomainError("flexible path does not validate at its epsilon");
  std::vector<MarkovIfs> out;
  for (int m = mLo; m <= mHi; ++m) out.push_back(family.member(m));
  return out;
}

namespace {

// Push a circle forward j times under the member return map and report the
// radial min/max around the origin.
void pushed_circle_extent(const MapChain& f, double r0, int j, double* rmin,
                          double* rmax, std::vector<Point2>* out = nullptr) {
  *rmin = 1e300;
  *rmax = 0.0;
  const int K = 128;
  for (int i = 0; i < K; ++i) {
    const double a = 2.0 * M_PI * (i + 0.31) / K;
    Point2 p = r0 * Vec2(std::cos(a), std::sin(a));
    for (int k = 0; k < j; ++k) p = apply(f, p);
    *rmin = std::min(*rmin, p.norm());
    *rmax = std::max(*rmax, p.norm());
    if (out) out->push_back(p);
  }
}

bool point_in_polygon(const std::vector<Point2>& poly, const Point2& p) {
  bool in = false;
  for (std::size_t i = 0, k = poly.size() - 1; i < poly.size(); k = i++) {
    if (((poly[i].y() > p.y()) != (poly[k].y() > p.y())) &&
        (p.x() < (poly[k].x() - poly[i].x()) * (p.y() - poly[i].y()) /
                     (poly[k].y() - poly[i].y()) +
                 poly[i].x()))
      in = !in;
  }
  return in;
}

}  // namespace

PreparednessReport verify_prepared(const PreparedFamily& family, int n) {
  PreparednessReport rep;
  const PreparedParams& P = family.params;
  const MapChain F = family.memberReturnMap(n);
  const double lam = P.lambda;
  const int tauN = family.tauOf(n);
  const double scale = family.scaleOf(n);
  const std::size_t pi = P.lambdas.size() - 1;

  // P0: D_q = B(1).
  {
    const Disc& d = family.base.discs[family.qDisc];
    const bool ok = d.is_round() && std::abs(d.round().radius - 1.0) < 1e-14 &&
                    d.round().center.norm() < 1e-14;
    rep.conditions.push_back({"P0", ok, 0.0});
  }
  // P1: homothetic identity on B(1) \ B(lambda^n) and round strata.
  {
    double sup = 0.0;
    const double inner = std::pow(lam, n);
    for (int i = 0; i < 48; ++i) {
      const double a = 2.0 * M_PI * i / 48;
      for (int k = 0; k < 12; ++k) {
        const double r = inner + (1.0 - inner) * (k + 0.5) / 12;
        const Point2 p = r * Vec2(std::cos(a), std::sin(a));
        sup = std::max(sup, (apply(F, p) - lam * p).norm());
      }
    }
    rep.conditions.push_back(
        {"P1-homothety", sup < tol::kHomothetyIdentity, sup});
    double var = 0.0;
    for (std::size_t i = 0; i <= pi; ++i) {
      double rmin, rmax;
      // Lambda_i for the member: circle of radius lambdas[i] (strata of the
      // first return map, one period).
      pushed_circle_extent(F, 1.0, static_cast<int>(i), &rmin, &rmax);
      var = std::max(var, std::abs(rmax - P.lambdas[i]) +
                              std::abs(rmin - P.lambdas[i]));
    }
    rep.conditions.push_back({"P1-strata", var < tol::kRoundness, var});
  }
  // P2-1: round image discs inside the diagonal region.
  {
    double rmin, rmax;
    pushed_circle_extent(F, 1.0, tauN, &rmin, &rmax);
    const double target = scale;
    const double var = std::max(std::abs(rmax - target), std::abs(rmin - target));
    const bool round = var < tol::kRoundness;
    // Diagonal region of member n: |x| <= u1r*scale/lambda; the map there is
    // (lambda x, k(y)) with k independent of x. Verify both properties.
    const double xext = P.core.u1r * scale / lam;
    bool inside = rmax <= xext;
    double diagResidual = 0.0;
    for (int k = 0; k < 16; ++k) {
      const double y = -scale + 2.0 * scale * (k + 0.5) / 16;
      const Point2 a = apply(F, Vec2(0.3 * scale, y));
      const Point2 b = apply(F, Vec2(-0.6 * scale, y));
      diagResidual = std::max(diagResidual, std::abs(a.y() - b.y()));
      diagResidual =
          std::max(diagResidual, std::abs(a.x() - lam * 0.3 * scale));
    }
    rep.conditions.push_back(
        {"P2-1", round && inside && diagResidual < 1e-10,
         std::max(var, diagResidual)});
  }
  // P2-2 / P2-3 / P2-4 per rectangle.
  for (std::size_t i = 0; i < pi; ++i) {
    const RectSpec r = P.betaRects[i];
    const double s = scale * std::pow(lam, static_cast<double>(i));
    const double xmin = r.xmin * s, xmax = r.xmax * s;
    const double ymin = r.ymin * s, ymax = r.ymax * s;
    // inside the annulus: corners inside circle lambda^{tauN+i}, outside the
    // next image disc (sampled as a polygon).
    std::vector<Point2> oval;
    double rmn, rmx;
    pushed_circle_extent(F, 1.0, tauN + static_cast<int>(i) + 1, &rmn, &rmx,
                         &oval);
    bool ok = true;
    double margin = 1e300;
    for (const Point2& c : {Point2(xmin, ymin), Point2(xmin, ymax),
                           Point2(xmax, ymin), Point2(xmax, ymax)}) {
      margin = std::min(margin, s / lam * 1.0 - c.norm());
      if (c.norm() >= s / lam) ok = false;  // outside Lambda_{tau+i} circle
      if (point_in_polygon(oval, c)) ok = false;
    }
    // sides parallel to axes by construction; center on the positive x-axis:
    if (std::abs(ymin + ymax) > 1e-12 || xmin <= 0.0) ok = false;
    // disjoint from {x=y}: entire rectangle below the diagonal.
    if (ymax >= xmin) ok = false;
    rep.conditions.push_back({"P2-2[" + std::to_string(i) + "]", ok, margin});

    // P2-3: pushed obstruction disc inside the rectangle interior.
    bool ok3 = !family.obstructionBranches.empty();
    double margin3 = 1e300;
    for (int ob : family.obstructionBranches) {
      const MapChain& om = family.base.branches[ob].map;
      for (int k = 0; k < 64; ++k) {
        const double a = 2.0 * M_PI * k / 64;
        Point2 p = apply(om, Vec2(std::cos(a), std::sin(a)));
        for (int j = 0; j < tauN + static_cast<int>(i); ++j) p = apply(F, p);
        const double m =
            std::min(std::min(p.x() - xmin, xmax - p.x()),
                     std::min(p.y() - ymin, ymax - p.y()));
        margin3 = std::min(margin3, m);
        if (m <= 0.0) ok3 = false;
      }
    }
    if (family.obstructionBranches.empty()) {
      ok3 = true;  // vacuous: no obstruction data in this scenario
      margin3 = 0.0;
    }
    rep.conditions.push_back({"P2-3[" + std::to_string(i) + "]", ok3, margin3});

    // P2-4: the declared well iterate lands inside some rectangle.
    const int tp = P.tauPrime > 0 ? P.tauPrime : tauN + static_cast<int>(i);
    bool ok4 = true;
    double margin4 = 1e300;
    const MapChain& wm = family.base.branches[family.wellBranch].map;
    for (int k = 0; k < 64; ++k) {
      const double a = 2.0 * M_PI * k / 64;
      Point2 p = apply(wm, Vec2(std::cos(a), std::sin(a)));
      for (int j = 0; j < tp; ++j) p = apply(F, p);
      const double m = std::min(std::min(p.x() - xmin, xmax - p.x()),
                                std::min(p.y() - ymin, ymax - p.y()));
      margin4 = std::min(margin4, m);
      if (m <= 0.0) ok4 = false;
    }
    rep.conditions.push_back({"P2-4[" + std::to_string(i) + "]", ok4, margin4});
  }
  // P3: strong stable manifold and disc placements per annulus.
  {
    Word w{{family.periodicBranch}};
    MarkovIfs mem = family.member(n);
    auto orb = find_periodic(mem, w);
    double sup = 0.0;
    bool twoSides = false;
    if (orb) {
      const CurveSample wss = strong_stable_local(mem, *orb, 0.999, 1601);
      bool neg = false, pos = false;
      for (std::size_t i = 0; i < wss.size(); ++i) {
        const double rr = wss.p[i].norm();
        for (std::size_t k = 0; k < pi; ++k) {
          if (rr >= P.lambdas[k + 1] && rr <= P.lambdaStars[k])
            sup = std::max(sup, std::abs(wss.p[i].y()));
        }
        if (wss.p[i].x() < -P.lambdas.back()) neg = true;
        if (wss.p[i].x() > P.lambdas.back()) pos = true;
      }
      twoSides = neg && pos;
    }
    rep.conditions.push_back({"P3-1", orb.has_value() && twoSides &&
                                          sup < tol::kSsAxis,
                              sup});
  }
  for (std::size_t k = 0; k < family.obstructionBranches.size(); ++k) {
    const MapChain& om = family.base.branches[family.obstructionBranches[k]].map;
    const Point2 c = apply(om, Vec2(0, 0));
    const double rad = (apply(om, Vec2(1, 0)) - c).norm();
    const double rr = c.norm();
    bool ok = false;
    for (std::size_t i = 0; i < pi; ++i)
      if (rr - rad > P.lambdas[i + 1] && rr + rad < P.lambdaStars[i]) ok = true;
    if (std::abs(c.y()) <= rad) ok = false;
    if (std::abs(c.x() - c.y()) / std::sqrt(2.0) <= rad) ok = false;
    rep.conditions.push_back({"P3-2[" + std::to_string(k) + "]", ok,
                              std::abs(c.y()) - rad});
  }
  {
    const Round& xi = P.xiDisc;
    const double rr = xi.center.norm();
    bool ok = false;
    for (std::size_t i = 0; i < pi; ++i)
      if (rr - xi.radius > P.lambdas[i + 1] && rr + xi.radius < P.lambdaStars[i])
        ok = true;
    if (std::abs(xi.center.y()) > 1e-12) ok = false;
    if (std::abs(xi.center.x() - xi.center.y()) / std::sqrt(2.0) <= xi.radius)
      ok = false;
    rep.conditions.push_back({"P3-3", ok, 0.0});
  }
  return rep;
}

}  // namespace mifs
