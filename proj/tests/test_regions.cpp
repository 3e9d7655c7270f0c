#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mifs/regions.hpp"
#include "mifs/scenario.hpp"

using namespace mifs;

TEST_CASE("relatively repelling annulus: closed-form margin 0.25") {
  const Scenario s = scenario_annulus();
  const Region R = Region::annulus(0, Vec2(0, 0), 0.25, 1.0, true);
  const RepellingReport rep = check_relatively_repelling(s.ifs, R, 64);
  CHECK(rep.pass);
  CHECK(rep.minMargin == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("a small ball around the fixed point is not relatively repelling") {
  const Scenario s = scenario_annulus();
  const Region R = Region::ball(0, Round{Vec2(0, 0), 0.1});
  const RepellingReport rep = check_relatively_repelling(s.ifs, R, 64);
  CHECK(!rep.pass);
}

TEST_CASE("the whole disc is trivially relatively repelling") {
  const Scenario s = scenario_annulus();
  const Region R = Region::annulus(0, Vec2(0, 0), 0.0, 1.0, true);
  const RepellingReport rep = check_relatively_repelling(s.ifs, R, 48);
  CHECK(rep.pass);
}

TEST_CASE("repelling_iterate keeps the property for n = 1,2,3") {
  const Scenario s = scenario_annulus();
  // the inner radius sits below 0.5^3 so every iterate is non-vacuous
  const Region R = Region::annulus(0, Vec2(0, 0), 0.06, 1.0, true);
  REQUIRE(check_relatively_repelling(s.ifs, R, 48).pass);
  for (int n : {1, 2, 3}) {
    const Region Rn = repelling_iterate(s.ifs, R, n);
    const RepellingReport rep = check_relatively_repelling(s.ifs, Rn, 48);
    CHECK_MESSAGE(rep.pass, "n = ", n, " margin ", rep.minMargin);
    CHECK(rep.samplesChecked > 0);
    CHECK(rep.minMargin > 0.0);
  }
  // n = 0 returns R itself
  const Region R0 = repelling_iterate(s.ifs, R, 0);
  CHECK(R0.pieces.size() == R.pieces.size());
}

TEST_CASE("lift_from_refinement adds the image complement") {
  const Scenario s = scenario_annulus();
  for (int n : {1, 2, 3}) {
    const MarkovIfs refined = refine(s.ifs, n);
    // the refined annulus: in refined coordinates the disc is B(0.5^n)
    const double rn = std::pow(0.5, n);
    const Region Rref = Region::annulus(0, Vec2(0, 0), 0.25 * rn, rn, true);
    const RepellingReport inner = check_relatively_repelling(refined, Rref, 48);
    CHECK(inner.pass);
    const Region lifted = lift_from_refinement(s.ifs, Rref, n);
    const RepellingReport rep = check_relatively_repelling(s.ifs, lifted, 48);
    CHECK_MESSAGE(rep.pass, "lift n = ", n, " margin ", rep.minMargin);
  }
  // empty refined region: the complement closure alone still passes
  Region empty;
  const Region lifted = lift_from_refinement(s.ifs, empty, 1);
  const RepellingReport rep = check_relatively_repelling(s.ifs, lifted, 48);
  CHECK(rep.pass);
}

namespace {

InvariantCurveFamily axis_family(const MarkovIfs& ifs) {
  const auto orb = find_periodic(ifs, Word{{0}});
  InvariantCurveFamily fam;
  CurvePiece cp;
  cp.curve = strong_stable_local(ifs, *orb, 0.999, 513);
  cp.hasOrbitPoint = true;
  fam.pieces.push_back(cp);
  return fam;
}

}  // namespace

TEST_CASE("normal scalings: kappa = 0 is the identity perturbation") {
  const Scenario w = scenario_weak_core();
  const InvariantCurveFamily fam = axis_family(w.ifs);
  const MarkovIfs out = build_normal_scalings(w.ifs, fam, 0.0);
  Rng rng(3);
  for (int i = 0; i < 64; ++i) {
    const Point2 p(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9));
    CHECK((apply(out.branches[0].map, p) - apply(w.ifs.branches[0].map, p))
              .norm() == 0.0);
  }
}

TEST_CASE("two-stage scaling flips the curve between repelling and attracting") {
  const Scenario w = scenario_weak_core();
  const InvariantCurveFamily fam = axis_family(w.ifs);
  const double eta = 0.1;
  // interior samples: the end caps of the scalings are legitimately neutral
  InvariantCurveFamily inner;
  {
    CurvePiece cp;
    cp.curve = sample_graph([](double) { return 0.0; }, -0.28, 0.28, 257, "mid");
    cp.hasOrbitPoint = true;
    inner.pieces.push_back(cp);
  }
  // kappa = 2 eta: normally repelling (backward quotient < 1)
  const MarkovIfs f1 = build_normal_scalings(w.ifs, fam, 2.0 * eta);
  NormalStrengthReport r1 = normal_strength(f1, inner, 1);
  CHECK(r1.maxNormal < 1.0);
  // then kappa = -3 eta: normally attracting (backward quotient > 1)
  const MarkovIfs f2 = build_normal_scalings(f1, fam, -3.0 * eta);
  NormalStrengthReport r2 = normal_strength(f2, inner, 1);
  CHECK(r2.minNormal > 1.0);
}

TEST_CASE("repeller/attractor synthesis on the weak core scenario") {
  const Scenario w = scenario_weak_core();
  const InvariantCurveFamily fam = axis_family(w.ifs);
  const double eta = 0.1;
  const RepellerAttractor ra = build_repeller_attractor(w.ifs, fam, eta);
  CHECK(ra.repelling.pass);
  CHECK(ra.repelling.minMargin > 0.0);
  CHECK(ra.attractorDichotomy);
  CHECK(ra.k1 <= 3);
  CHECK(ra.uniformContractionNorm < 1.0);
  CHECK(ra.totalC1 <= 12.0 * eta);
  // identity near q: the first-return map is bit-identical near the origin
  Rng rng(13);
  for (int i = 0; i < 64; ++i) {
    const Point2 p(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
    const Point2 a = apply(ra.identityAtQ.branches[0].map, p);
    const Point2 b = apply(w.ifs.branches[0].map, p);
    CHECK(a.x() == b.x());
    CHECK(a.y() == b.y());
  }
  // large stable manifold preserved for the identity-adjusted variant
  const auto orb = find_periodic(ra.identityAtQ, Word{{0}});
  REQUIRE(orb.has_value());
  const auto cert = large_stable_certificate(ra.identityAtQ, *orb, 12, 700, 0.12);
  CHECK(cert.pass);
}

TEST_CASE("eta guard refuses oversized scalings") {
  const Scenario w = scenario_weak_core();
  const InvariantCurveFamily fam = axis_family(w.ifs);
  CHECK_THROWS(build_repeller_attractor(w.ifs, fam, 0.25));
}

TEST_CASE("SupportCollision when the scaling tube exits the disc") {
  const Scenario w = scenario_weak_core();
  InvariantCurveFamily fam;
  CurvePiece cp;
  cp.curve = sample_graph([](double x) { return 0.93; }, -0.3, 0.3, 129, "hi");
  cp.hasOrbitPoint = false;
  fam.pieces.push_back(cp);
  ScalingOptions opt;
  opt.supportWidth = 0.3;
  CHECK_THROWS_AS(build_normal_scalings(w.ifs, fam, 0.1, opt),
                  SupportCollision);
}

TEST_CASE("periodic orbits of the restricted contracting IFS are large-stable") {
  // The restriction (A, H-hat) is uniformly contracting, so every point of an
  // A component converges to the periodic point: iterate tube samples while
  // they stay in A and verify landing plus per-step contraction.
  const Scenario w = scenario_weak_core();
  const InvariantCurveFamily fam = axis_family(w.ifs);
  const RepellerAttractor ra = build_repeller_attractor(w.ifs, fam, 0.1);
  CHECK(ra.uniformContractionNorm < 1.0);
  const auto orb = find_periodic(ra.contracting, Word{{0}});
  REQUIRE(orb.has_value());
  const auto& tube = std::get<TubePiece>(ra.A.pieces[0].piece);
  int landed = 0, total = 0;
  for (int i = 0; i <= 24; ++i) {
    for (double off : {-0.9, 0.0, 0.9}) {
      const double x = tube.curve.front().x() +
                       (tube.curve.back().x() - tube.curve.front().x()) * i / 24.0;
      double u, s;
      Point2 p(x, 0);
      tube.curve.project(p, &u, &s);
      p = tube.curve.eval(u) + off * tube.halfWidth *
                                   Vec2(-tube.curve.eval_tangent(u).y(),
                                        tube.curve.eval_tangent(u).x());
      if (!region_contains(ra.contracting, ra.A, p)) continue;
      ++total;
      bool stayed = true;
      for (int k = 0; k < 80 && stayed; ++k) {
        p = apply(ra.contracting.branches[0].map, p);
        if (!region_contains(ra.contracting, ra.A, p)) stayed = false;
      }
      if (stayed && (p - orb->point).norm() < 0.02) ++landed;
    }
  }
  CHECK(total > 30);
  CHECK(landed == total);
}
