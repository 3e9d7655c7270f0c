#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mifs/retarded.hpp"
#include "mifs/scenario.hpp"

using namespace mifs;

TEST_CASE("build_retarded: homothety core gives a homothety family") {
  MapChain core;
  Homothety h;
  h.factor = 0.5;
  core.primitives.push_back(h);
  const RetardedFamily fam = build_retarded(core, 0.5, 1.0, 1);
  const MapChain m3 = fam.member(3);
  Rng rng(5);
  for (int i = 0; i < 64; ++i) {
    const Point2 p(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7));
    CHECK((apply(m3, p) - 0.5 * p).norm() < 1e-15);
  }
}

TEST_CASE("build_retarded rejects non-homothetic cores") {
  MapChain core;
  Affine a;
  a.matrix << 0.5, 0.0, 0.0, 0.45;
  core.primitives.push_back(a);
  CHECK_THROWS_AS(build_retarded(core, 0.5, 1.0, 1), GluingMismatch);
}

TEST_CASE("member geometry: homothetic region maps circles exactly") {
  const PreparedFamily fam = scenario_pipeline().family();
  const MapChain m4 = fam.memberReturnMap(4);
  const double lam = fam.params.lambda;
  for (int i = 0; i < 32; ++i) {
    const double a = 2.0 * M_PI * i / 32;
    for (double r : {0.999, lam, lam * lam}) {
      const Point2 p = r * Vec2(std::cos(a), std::sin(a));
      CHECK((apply(m4, p) - lam * p).norm() < 1e-14);
    }
  }
}

TEST_CASE("retarded conjugation identity across member indices") {
  const PreparedFamily fam = scenario_pipeline().family();
  const double lam = fam.params.lambda;
  const MapChain m3 = fam.memberReturnMap(3);
  const MapChain m4 = fam.memberReturnMap(4);
  // member(m+1) = H_lambda o member(m) o H_lambda^{-1} on the core region
  Rng rng(9);
  double worst = 0.0;
  const double rc = std::pow(lam, 4);  // core region of member 4
  for (int i = 0; i < 200; ++i) {
    Point2 p(rng.uniform(-rc, rc), rng.uniform(-rc, rc));
    if (p.norm() > rc) continue;
    const Point2 lhs = apply(m4, p);
    const Point2 rhs = lam * apply(m3, p / lam);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("member fixed point is unique with eigenvalues (lambda, 1)") {
  const PreparedFamily fam = scenario_pipeline().family();
  MarkovIfs m2 = fam.member(2);
  const auto orb = find_periodic(m2, Word{{fam.periodicBranch}});
  REQUIRE(orb.has_value());
  CHECK(orb->point.norm() < 1e-10);
  CHECK(orb->eigen.a == doctest::Approx(fam.params.lambda).epsilon(1e-9));
  CHECK(orb->eigen.b == doctest::Approx(1.0).epsilon(1e-9));
  // no other fixed point on a grid
  const MapChain ret = fam.memberReturnMap(2);
  for (int i = 0; i < 24; ++i) {
    for (int j = 0; j < 24; ++j) {
      const Point2 p(-0.9 + 1.8 * i / 23.0, -0.9 + 1.8 * j / 23.0);
      if (p.norm() > 0.95 || p.norm() < 1e-3) continue;
      CHECK((apply(ret, p) - p).norm() > 1e-6);
    }
  }
}

TEST_CASE("verify_prepared passes on the bundled prepared scenarios") {
  for (const char* name : {"toy_basic", "pipeline"}) {
    const PreparedFamily fam = bundled_scenario(name).family();
    const PreparednessReport rep = verify_prepared(fam, 1);
    for (const auto& c : rep.conditions)
      CHECK_MESSAGE(c.pass, name, ": ", c.name, " margin ", c.margin);
    // and on a deeper member
    const PreparednessReport rep3 = verify_prepared(fam, 3);
    CHECK(rep3.pass());
  }
}

TEST_CASE("build_prepared rejects bad placements") {
  PreparedParams p = scenario_pipeline().preparedParams.value();
  p.xiDisc.center = Vec2(0.85, 0.01);  // off the x-axis
  CHECK_THROWS_AS(build_prepared(p), ConstraintViolation);

  PreparedParams q = scenario_pipeline().preparedParams.value();
  q.deltaDiscs[0].center = Vec2(0.5, 0.5);  // on the diagonal
  CHECK_THROWS_AS(build_prepared(q), ConstraintViolation);
}

TEST_CASE("saddle-node family keeps the homoclinic point, itinerary and bounds") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  const auto members = build_saddle_node_family(fam, *s.flexiblePath, 2, 5);
  for (const auto& m : members) {
    const auto orb = find_periodic(m, Word{{fam.periodicBranch}});
    REQUIRE(orb.has_value());
    CHECK(orb->eigen.b == doctest::Approx(1.0).epsilon(1e-9));
    const auto rep = verify_homoclinic(m, *orb, *s.homoclinic);
    CHECK(rep.pass());
  }
  // C1 distance between members stays within the scenario epsilon
  const C1Distance d =
      c1_distance(members[0].branches[fam.periodicBranch].map,
                  members[3].branches[fam.periodicBranch].map,
                  Round{Vec2(0, 0), 0.95}, 64);
  CHECK(d.c1 <= s.flexiblePath->epsilon);
}

TEST_CASE("homothetic annulus width across member indices 3 and 6") {
  const PreparedFamily fam = scenario_toy_basic().family();
  const double lam = fam.params.lambda;
  for (int m : {3, 6}) {
    const MapChain f = fam.memberReturnMap(m);
    // circle |p| = lambda^(m-1) maps to |p| = lambda^m exactly
    for (int i = 0; i < 16; ++i) {
      const double a = 2.0 * M_PI * i / 16;
      const Point2 p = std::pow(lam, m - 1) * Vec2(std::cos(a), std::sin(a));
      CHECK(apply(f, p).norm() ==
            doctest::Approx(std::pow(lam, m)).epsilon(1e-12));
    }
  }
}
