#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mifs/fragmentation.hpp"
#include "mifs/scenario.hpp"

using namespace mifs;

namespace {

GraphCurve probe_curve(double height = 0.3) {
  return GraphCurve::from_function(
      [height](double x) {
        const double u = (1.0 - x * x) / (1.0 - 0.1);
        const double v = std::min(1.0, std::max(0.0, u));
        return height * v * v * (3 - 2 * v) * 0.0 +
               height * cap_profile(std::min(1.0, std::abs(x) / 0.9));
      },
      nullptr, 0.5, 0.1, 2049);
}

GraphCurve smooth_bump(double height, double alpha) {
  // height * cap(x/0.9): flat outside |x| > 0.9, slope bounded by alpha
  return GraphCurve::from_function(
      [height](double x) {
        const double s = x / 0.9;
        return std::abs(s) >= 1.0 ? 0.0 : height * cap_profile(s);
      },
      [height](double x) {
        const double s = x / 0.9;
        return std::abs(s) >= 1.0 ? 0.0 : height * cap_profile_d(s) / 0.9;
      },
      alpha, 0.1, 4097);
}

}  // namespace

TEST_CASE("fragment_graph: the axis costs nothing") {
  GraphCurve g = GraphCurve::from_function([](double) { return 0.0; }, nullptr,
                                           0.5, 0.1, 257);
  const CostCertificate c = fragment_graph(g, 0.1);
  CHECK(c.K == 0);
}

TEST_CASE("fragment_graph on the bundled probe at eta = 0.1") {
  const GraphCurve g = smooth_bump(0.28, 0.5);
  CHECK(g.sampled_slope_bound() <= 0.5);
  const CostCertificate cert = fragment_graph(g, 0.1);
  REQUIRE(cert.lazy());
  CHECK(cert.K == cert.n * cert.n * cert.n * (cert.n + 5));
  // every factor obeys the support-diameter bound (closed-form sweep over the
  // extremal layers) ...
  CHECK(boufra_max_support_diameter(g, cert.n) <= 0.1);
  // ... and a seeded sample of factors obeys the sampled C1 bound.
  Rng rng(31);
  for (int trial = 0; trial < 48; ++trial) {
    const long long idx =
        static_cast<long long>(rng.next_double() * (cert.K - 1));
    const SmallDiffeo sd = cert.factor(idx);
    CHECK(sd.supportDiameter <= 0.1);
    Vec2 lo = sd.supportDisc.center - Vec2(sd.supportDisc.radius, sd.supportDisc.radius);
    Vec2 hi = sd.supportDisc.center + Vec2(sd.supportDisc.radius, sd.supportDisc.radius);
    double c1 = 0.0;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) {
        const Point2 p(lo.x() + (hi.x() - lo.x()) * (a + 0.5) / 5,
                       lo.y() + (hi.y() - lo.y()) * (b + 0.5) / 5);
        const Mat2 J = jacobian(sd.chain, p);
        c1 = std::max(c1, op_norm(J - Mat2::Identity()));
      }
    CHECK(c1 <= 0.1);
  }
  CHECK(cert.compositionError < tol::kCompositionResidual);
}

TEST_CASE("fragment_graph: halving the curve never increases n") {
  const GraphCurve g1 = smooth_bump(0.28, 0.5);
  const GraphCurve g2 = smooth_bump(0.14, 0.25);
  const CostCertificate c1 = fragment_graph(g1, 0.12);
  const CostCertificate c2 = fragment_graph(g2, 0.12);
  CHECK(c2.n <= c1.n);
}

TEST_CASE("boufra layer commutation within one layer") {
  // Composing the j-factors of one i-layer in reversed order changes the
  // result by < 1e-9.
  const GraphCurve g = smooth_bump(0.28, 0.5);
  const CostCertificate cert = fragment_graph(g, 0.35);
  REQUIRE(cert.lazy());
  const long long i = cert.n * cert.n;  // an arbitrary layer
  std::vector<MapChain> js;
  for (int j = -2; j <= static_cast<int>(cert.n) + 2; ++j) {
    BoufraLayerField f;
    f.f = cert.f;
    f.n = cert.n;
    f.i = i;
    f.j = j;
    BumpFlow bf;
    bf.field = f;
    bf.integrationSteps = 8;
    js.push_back(MapChain::of(bf));
  }
  Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 32; ++t) {
    const double x = rng.uniform(-0.9, 0.9);
    const double y = (static_cast<double>(i) / (cert.n * cert.n * cert.n)) *
                     g.f.eval(x);
    Point2 fwd(x, y), rev(x, y);
    for (const auto& c : js) fwd = apply(c, fwd);
    for (auto it = js.rbegin(); it != js.rend(); ++it) rev = apply(*it, rev);
    worst = std::max(worst, (fwd - rev).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("small full composition reproduces the layer ladder") {
  // With a loose eta the factor family is small enough to compose directly.
  const GraphCurve g = smooth_bump(0.2, 0.4);
  const CostCertificate cert = fragment_graph(g, 0.65);
  REQUIRE(cert.lazy());
  REQUIRE(cert.K <= 2000000);
  const long long n3 = cert.n * cert.n * cert.n;
  double worst = 0.0;
  for (int t = 0; t < 12; ++t) {
    const double x = -0.85 + 1.7 * t / 11.0;
    Point2 p(x, 0.0);
    for (long long i = 0; i < n3; ++i) {
      BoufraLayerField f;
      f.f = cert.f;
      f.n = cert.n;
      f.i = i;
      f.j = BoufraLayerField::kWholeLayer;
      BumpFlow bf;
      bf.field = f;
      bf.integrationSteps = 8;
      p = apply(MapChain::of(bf), p);
    }
    worst = std::max(worst, std::abs(p.y() - g.f.eval(x)));
  }
  CHECK(worst < tol::kCompositionResidual);
}

TEST_CASE("zeta curves: clauses, slope bound, uniform cost") {
  const PreparedFamily fam = scenario_pipeline().family();
  const ZetaReport rep = build_zeta_curves(fam, 1, 6);
  CHECK(rep.clausesPass);
  for (const auto& fail : rep.clauseFailures) CHECK_MESSAGE(false, fail);
  CHECK(rep.alphaRotated < 6.0);
  // zeta_-inf has rotated-frame slope 0
  CHECK(rep.zetaMinusInf.graph_slope_bound(
            [](const Vec2& p) { return to_diag_frame(p); }) < 1e-9);
  // connectedness of zeta_3 with the image discs
  const MapChain F = fam.memberReturnMap(1);
  for (int j = 2; j <= 8; ++j) {
    int runs = 0;
    bool prev = false;
    for (const auto& p : rep.curves[3].p) {
      // membership in LambdaBar_j via the inverse orbit
      bool in = true;
      Point2 q = p;
      for (int k = 0; k < j && in; ++k) {
        q = apply_inverse(F, q);
        if (k + 1 == j && q.norm() > 1.0) in = false;
      }
      if (q.norm() > 1.0) in = false;
      if (in && !prev) ++runs;
      prev = in;
    }
    CHECK(runs == 1);
  }
  // uniform eta-cost from the diagonal chord across indices
  const double s = fam.scaleOf(1);
  const Round container{Vec2(0, 0), s};
  long long k0 = -1;
  for (int i : {3, 4, 5}) {
    const CostCertificate c =
        eta_cost(rep.curves[i], rep.zetaMinusInf, container, 0.1);
    if (k0 < 0) k0 = c.K;
    CHECK(c.K == k0);
  }
}

TEST_CASE("gamma curves: bullets pass at the minimum feasible depth") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  const int n = 4;
  MarkovIfs member = fam.member(n);
  const auto orb = find_periodic(member, Word{{fam.periodicBranch}});
  const WellSystem ws = compute_well_system(member, *orb, *s.homoclinic, 16);
  const int m = fam.tauOf(n) + 3;
  const GammaReport rep = build_gamma_family(fam, ws, n, m);
  CHECK(rep.coincidesNearBoundary);
  CHECK(rep.tailMatchesPushforward);
  CHECK(rep.xiConnectedThetaDisjoint);
  CHECK(rep.tConnectedSDisjoint);
  CHECK(rep.tailSupDistance < tol::kS5Sup);
  // gamma_0 is the x-axis chord of Xi_1
  const CurveSample g0 = gamma_zero(fam);
  for (const auto& p : g0.p) CHECK(p.y() == 0.0);
  CHECK_THROWS_AS(build_gamma_family(fam, ws, n, 2), DepthInfeasible);
}

TEST_CASE("eta_cost basics") {
  const PreparedFamily fam = scenario_toy_basic().family();
  const CurveSample g0 = gamma_zero(fam);
  // source == target: zero cost
  const CostCertificate c0 =
      eta_cost(g0, g0, fam.params.xiDisc, 0.1);
  CHECK(c0.K == 0);
  // doubling eta never increases K
  const Scenario s = scenario_toy_basic();
  const int n = 4;
  MarkovIfs member = fam.member(n);
  const auto orb = find_periodic(member, Word{{fam.periodicBranch}});
  const WellSystem ws = compute_well_system(member, *orb, *s.homoclinic, 16);
  const GammaReport rep = build_gamma_family(fam, ws, n, fam.tauOf(n) + 3);
  const CostCertificate cA = eta_cost(rep.gamma, g0, fam.params.xiDisc, 0.15);
  const CostCertificate cB = eta_cost(rep.gamma, g0, fam.params.xiDisc, 0.30);
  CHECK(cB.K <= cA.K);
  CHECK(cA.compositionError < tol::kCompositionResidual);
  for (const auto& f : cA.factors) CHECK(f.c1Bound <= 0.15);
}

TEST_CASE("eta_cost rejects non-graph curves") {
  // a spiral is not a monotone graph in either admitted frame
  CurveSample spiral = sample_curve(
      [](double t) {
        const double r = 0.2 + 0.1 * t;
        return Vec2(r * std::cos(6.0 * t), r * std::sin(6.0 * t));
      },
      0.0, 2.0, 257, "spiral");
  const PreparedFamily fam = scenario_toy_basic().family();
  CHECK_THROWS_AS(
      eta_cost(spiral, gamma_zero(fam), Round{Vec2(0, 0), 1.0}, 0.1),
      NotGraphRepresentable);
}

TEST_CASE("GeometryInfeasible when rectangles leave no vertical corridor") {
  PreparedParams p = scenario_pipeline().preparedParams.value();
  p.betaRects = {{0.30, 0.95, -0.1, 0.1}};
  // consecutive iterated rectangles overlap in x, so no corridor remains
  const PreparedFamily fam = build_prepared(p);
  CHECK_THROWS_AS(build_zeta_curves(fam, 1, 4), GeometryInfeasible);
}
