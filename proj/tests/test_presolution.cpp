#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mifs/presolution.hpp"
#include "mifs/scenario.hpp"

using namespace mifs;

namespace {

struct Built {
  Scenario s;
  PreparedFamily fam;
  WellSystem ws;
  PreSolution ps;
  Built(const Scenario& sc, int n0, int m, double eta)
      : s(sc), fam(sc.family()), ws(make_ws(fam, sc, n0)) {
    ps = build_presolution(fam, ws, n0, m, eta);
  }
  static WellSystem make_ws(const PreparedFamily& fam, const Scenario& sc,
                            int n0) {
    MarkovIfs member = fam.member(n0);
    auto orb = find_periodic(member, Word{{fam.periodicBranch}});
    return compute_well_system(member, *orb, *sc.homoclinic, 40);
  }
};

}  // namespace

TEST_CASE("toy pre-solution passes S1-S5 and the telescoping identity") {
  const Scenario s = scenario_toy_basic();
  // relaxed budget on the toy scenario
  const double eta = s.pipeline.etaCost;
  // probe the cost first to choose n0
  const PreparedFamily fam = s.family();
  WellSystem ws = Built::make_ws(fam, s, 3);
  const GammaReport gp = build_gamma_family(fam, ws, 3, fam.tauOf(3) + 4);
  const CostCertificate cc = eta_cost(gp.gamma, gamma_zero(fam),
                                      fam.params.xiDisc, eta);
  const int n0 = static_cast<int>(cc.K) + 2;
  const int m = fam.tauOf(n0) + 3;
  Built b(s, n0, m, eta);
  CHECK(b.ps.report.s1);
  CHECK(b.ps.report.s2);
  CHECK(b.ps.report.s3);
  CHECK(b.ps.report.s4);
  CHECK(b.ps.report.s5);
  CHECK(b.ps.telescopingResidual < 1e-9);
  CHECK(b.ps.c1Size <= eta * 1.001);
  // the admissible factors live in discs of radius at most eta
  for (const auto& f : b.ps.cost.factors)
    CHECK(f.supportDisc.radius <= eta);
  CHECK((b.ps.cost.K + 1) < static_cast<long long>(n0));
  // admissible support annuli
  const bool supportCount =
      static_cast<long long>(b.ps.report.admissibleSupport.size()) ==
      b.ps.cost.K;
  CHECK(supportCount);

  // negative control: dropping the factors breaks the S conditions (in this
  // geometry the unperturbed manifold is the axis, which already matches the
  // pushed-forward curve, so the failure shows up as S4 well crossings)
  MarkovIfs broken = b.fam.member(n0);
  const PreSolutionReport neg =
      check_presolution(broken, b.fam, b.ws, n0, m, nullptr);
  CHECK(!neg.pass());
  CHECK(!neg.s4);

  // identity fragmentation: gamma == gamma_0 scenario gives G = member
  const CostCertificate zero =
      eta_cost(gamma_zero(fam), gamma_zero(fam), fam.params.xiDisc, eta);
  CHECK(zero.K == 0);
}

TEST_CASE("first-return map is untouched near q (admissibility)") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  WellSystem ws = Built::make_ws(fam, s, 3);
  const GammaReport gp = build_gamma_family(fam, ws, 3, fam.tauOf(3) + 4);
  const CostCertificate cc =
      eta_cost(gp.gamma, gamma_zero(fam), fam.params.xiDisc, s.pipeline.etaCost);
  const int n0 = static_cast<int>(cc.K) + 2;
  const int m = fam.tauOf(n0) + 4;
  Built b(s, n0, m, s.pipeline.etaCost);
  const MapChain& g = b.ps.G.branches[fam.periodicBranch].map;
  const MapChain base = fam.memberReturnMap(n0);
  Rng rng(77);
  const double r = 0.4 * std::pow(fam.params.lambda, b.ps.cost.K + 1);
  for (int i = 0; i < 64; ++i) {
    const Point2 p(rng.uniform(-r, r), rng.uniform(-r, r));
    CHECK((apply(g, p) - apply(base, p)).norm() == 0.0);
  }
}

TEST_CASE("invariant curve extraction: univalence, anchors, invariance") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  WellSystem ws = Built::make_ws(fam, s, 3);
  const GammaReport gp = build_gamma_family(fam, ws, 3, fam.tauOf(3) + 4);
  const CostCertificate cc =
      eta_cost(gp.gamma, gamma_zero(fam), fam.params.xiDisc, s.pipeline.etaCost);
  const int n0 = static_cast<int>(cc.K) + 2;
  const int m = fam.tauOf(n0) + 3;
  Built b(s, n0, m, s.pipeline.etaCost);
  REQUIRE(b.ps.report.pass());
  const InvariantCurveFamily gamma =
      extract_invariant_curves(b.ps.G, fam, b.ps.wss, m);
  CHECK(gamma.univalent);
  CHECK(gamma.maxInvarianceResidual < tol::kCurveInvariance);
  CHECK(!gamma.pieces.empty());
  for (const auto& cp : gamma.pieces) {
    const bool anchored = cp.hasOrbitPoint || cp.hasHomoclinicPoint;
    CHECK_MESSAGE(anchored, "piece without anchor: ", cp.curve.id);
  }
}

TEST_CASE("normal strength: skew products and homothety") {
  // x-axis under diag(l0, 1): neutral quotient, eta-weak for every eta
  {
    const Scenario w = scenario_weak_core();
    const auto orb = find_periodic(w.ifs, Word{{0}});
    const CurveSample wss = strong_stable_local(w.ifs, *orb, 0.9, 513);
    InvariantCurveFamily fam;
    fam.level = 0;
    CurvePiece cp;
    cp.curve = wss;
    cp.hasOrbitPoint = true;
    fam.pieces.push_back(cp);
    const NormalStrengthReport rep = normal_strength(w.ifs, fam, 3);
    CHECK(rep.minNormal == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.maxNormal == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.impliedEta < 1e-8);
  }
  // x-axis under a homothety: per-step quotient 1/lambda
  {
    const Scenario a = scenario_annulus();
    const auto orb = find_periodic(a.ifs, Word{{0}});
    InvariantCurveFamily fam;
    fam.level = 0;
    CurvePiece cp;
    cp.curve = sample_graph([](double) { return 0.0; }, -0.9, 0.9, 257, "axis");
    cp.hasOrbitPoint = true;
    fam.pieces.push_back(cp);
    const NormalStrengthReport rep = normal_strength(a.ifs, fam, 1);
    CHECK(rep.maxNormal == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("toy pipeline end to end") {
  const Scenario s = scenario_toy_basic();
  const PipelineReport rep =
      build_weak_curves_end_to_end(s.family(), *s.flexiblePath, s.pipeline);
  CHECK(rep.costDepthIndependent);
  CHECK(rep.cocycleAtOne);
  CHECK(rep.etaMonotone);
  CHECK(rep.budgetsOk);
  for (const auto& d : rep.depths) {
    CHECK(d.presol.pass());
    CHECK(d.univalent);
    CHECK(d.anchorsOk);
    CHECK(d.telescoping < 1e-9);
  }
  CHECK(!rep.dwell.inconclusive);
  CHECK(rep.dwell.intervalStructureOk);
  CHECK(rep.dwell.boundHolds);
}

TEST_CASE("dwell below the feasible horizon is inconclusive") {
  const Scenario w = scenario_weak_core();
  InvariantCurveFamily fam;
  CurvePiece cp;
  cp.curve = sample_graph([](double) { return 0.0; }, -0.9, 0.9, 257, "axis");
  cp.hasOrbitPoint = true;
  fam.pieces.push_back(cp);
  // W so small that ell0 exceeds L: the bound is not claimed
  const DwellReport rep = dwell_distribution(w.ifs, fam, 3, 0.05);
  CHECK(rep.inconclusive);
}

TEST_CASE("extracted curves are tangentially contracting (backward expansion)") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  WellSystem ws = Built::make_ws(fam, s, 3);
  const GammaReport gp = build_gamma_family(fam, ws, 3, fam.tauOf(3) + 4);
  const CostCertificate cc =
      eta_cost(gp.gamma, gamma_zero(fam), fam.params.xiDisc, s.pipeline.etaCost);
  const int n0 = static_cast<int>(cc.K) + 2;
  const int m = fam.tauOf(n0) + 3;
  Built b(s, n0, m, s.pipeline.etaCost);
  const InvariantCurveFamily gamma =
      extract_invariant_curves(b.ps.G, fam, b.ps.wss, m);
  // k0 = 1: every defined backward step expands tangentially
  double worst = 1e300;
  int used = 0;
  for (const auto& cp : gamma.pieces) {
    const int stride = std::max<int>(1, static_cast<int>(cp.curve.size()) / 16);
    for (int k = 0; k < static_cast<int>(cp.curve.size()); k += stride) {
      Point2 pre;
      int branch = -1;
      try {
        auto [bb, pp] = inverse_step(b.ps.G, cp.curve.p[k]);
        branch = bb;
        pre = pp;
      } catch (const NotInImage&) {
        continue;
      }
      const Mat2 Jinv = jacobian(b.ps.G.branches[branch].map, pre).inverse();
      worst = std::min(worst, (Jinv * cp.curve.tangent[k]).norm());
      ++used;
    }
  }
  CHECK(used > 50);
  CHECK(worst > 1.0);
}
