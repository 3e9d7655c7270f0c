#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mifs/scenario.hpp"
#include "mifs/wells.hpp"

using namespace mifs;

namespace {

struct Setup {
  MarkovIfs ifs;
  PeriodicOrbit orbit;
  HomoclinicPoint H;
};

Setup member_setup(const Scenario& s, int n) {
  Setup st;
  const PreparedFamily fam = s.family();
  st.ifs = fam.member(n);
  st.orbit = *find_periodic(st.ifs, Word{{fam.periodicBranch}});
  st.H = *s.homoclinic;
  return st;
}

}  // namespace

TEST_CASE("indices of the toy scenario: Q1 = q, t = 1, a = 0, d = 0") {
  const Setup st = member_setup(scenario_toy_basic(), 2);
  const WellIndices idx = compute_indices(st.ifs, st.orbit, st.H);
  CHECK(idx.t == 1);
  CHECK(idx.a == 0);
  CHECK(idx.d == 0);
  CHECK((idx.Q1 - st.orbit.point).norm() < 1e-10);
  CHECK((idx.Q2 - st.H.point).norm() < 1e-10);
}

TEST_CASE("two_disc transit gives t = 2 and a non-empty Theta_1") {
  const Scenario s = scenario_two_disc();
  const auto orb = find_periodic(s.ifs, s.orbitWord);
  REQUIRE(orb.has_value());
  const WellSystem ws = compute_well_system(s.ifs, *orb, *s.homoclinic, 8);
  CHECK(ws.idx.t == 2);
  CHECK(ws.idx.a == 0);
  // Theta_1 contains the pushed spur image
  const Point2 spurImage = apply(s.ifs.branches[3].map, Vec2(0, 0));
  const Point2 inTheta = apply(s.ifs.branches[2].map, spurImage);
  CHECK(membership(ws, WellSet::Theta, 1, inTheta));
  // ... and is disjoint from the x-axis near Q
  CHECK(!membership(ws, WellSet::Theta, 1, Vec2(0.8, 0.0)));
  // T_0 = Xi_t
  for (int k = 0; k < 32; ++k) {
    const double a = 2.0 * M_PI * k / 32;
    const Point2 p = Vec2(0.8, 0) + 0.0015 * Vec2(std::cos(a), std::sin(a));
    CHECK(membership(ws, WellSet::T, 0, p) ==
          membership(ws, WellSet::Xi, ws.idx.t, p));
  }
}

TEST_CASE("longer transit chains give t = 4") {
  // Chain D1 -> D2 -> D3 -> D4 -> D1 with three intermediate discs.
  MarkovIfs ifs;
  for (int i = 0; i < 4; ++i) {
    Disc d;
    d.shape = Round{Vec2(3.0 * i, 0), 1.0};
    ifs.discs.push_back(d);
  }
  Branch member;
  member.dom = 0;
  member.target = 0;
  Homothety h;
  h.factor = 0.5;
  member.map = MapChain::of(h);
  ifs.branches.push_back(member);
  for (int i = 0; i < 3; ++i) {
    Branch b;
    b.dom = i;
    b.target = i + 1;
    Affine a;
    a.matrix = 0.05 * Mat2::Identity();
    a.offset = Vec2(3.0 * (i + 1), 0);
    b.map = MapChain::of(a);
    ifs.branches.push_back(b);
  }
  Branch back;
  back.dom = 3;
  back.target = 0;
  Affine a;
  a.matrix = 0.03 * Mat2::Identity();
  a.offset = Vec2(0.8, 0) - 0.03 * Vec2(9.0, 0);
  back.map = MapChain::of(a);
  ifs.branches.push_back(back);

  const auto orb = find_periodic(ifs, Word{{0}});
  REQUIRE(orb.has_value());
  HomoclinicPoint H;
  H.word = Word{{1, 2, 3, 4}};
  H.point = evaluate_word(ifs, H.word, orb->point);
  const WellIndices idx = compute_indices(ifs, *orb, H);
  CHECK(idx.t == 4);
}

TEST_CASE("well system of the toy scenario: nesting, T0 = Xi_t, S placement") {
  const Scenario s = scenario_toy_basic();
  const Setup st = member_setup(s, 2);
  const WellSystem ws = compute_well_system(st.ifs, st.orbit, st.H, 10);

  // center of Xi_1 is in Xi_1; q is not in T_n for n >= 1
  CHECK(membership(ws, WellSet::Xi, 1, s.preparedParams->xiDisc.center));
  CHECK(!membership(ws, WellSet::T, 1, st.orbit.point));
  CHECK(!membership(ws, WellSet::Xi, 1, Vec2(0.0, 1.2)));

  // nesting T_{n+1} subset T_n to depth 10, sampled on boundaries
  for (int n = 0; n < 10; ++n) {
    const auto bd = well_boundary(ws, WellSet::T, n + 1, 64);
    for (const auto& p : bd) CHECK(membership(ws, WellSet::T, n, p));
  }
  // S_n sits inside Int(T_n minus T_{n+1})
  for (int n = 0; n < 6; ++n) {
    const auto bd = well_boundary(ws, WellSet::S, n, 48);
    REQUIRE(!bd.empty());
    for (const auto& p : bd) {
      CHECK(membership(ws, WellSet::T, n, p));
      CHECK(!membership(ws, WellSet::T, n + 2, p));
    }
  }
  // Delta_0 disjoint from Xi_1 (they share the annulus)
  REQUIRE(!ws.deltaEmpty[0]);
  const auto xiBd = well_boundary(ws, WellSet::Xi, 1, 64);
  for (const auto& p : xiBd) CHECK(!membership(ws, WellSet::Delta, 0, p));
}

TEST_CASE("self-similarity: T_{d+j} equals the pushed image disc") {
  const Scenario s = scenario_toy_basic();
  const Setup st = member_setup(s, 2);
  const WellSystem ws = compute_well_system(st.ifs, st.orbit, st.H, 10);
  // d = 0: T_j = F_q^a o F_Q^t o F_q^d (LambdaBar_j); evaluate both routes.
  Rng rng(17);
  for (int j = 0; j < 6; ++j) {
    for (int k = 0; k < 120; ++k) {
      const Point2 p(rng.uniform(0.7, 0.95), rng.uniform(-0.1, 0.1));
      // route 1: direct membership
      const bool inT = membership(ws, WellSet::T, ws.idx.d + j, p);
      // route 2: pull back through transit + a, then LambdaBar_j membership
      bool inPush = false;
      try {
        Point2 q = p;
        for (auto it = ws.idx.transitWord.rbegin();
             it != ws.idx.transitWord.rend(); ++it)
          q = apply_inverse(st.ifs.branches[*it].map, q);
        inPush = st.ifs.disc_contains(0, q) &&
                 membership(ws, WellSet::LambdaBar, j, q);
      } catch (const DomainError&) {
        inPush = false;
      }
      CHECK(inT == inPush);
    }
  }
}

TEST_CASE("wells unchanged under admissible perturbations") {
  const Scenario s = scenario_toy_basic();
  const PreparedFamily fam = s.family();
  const Setup st = member_setup(s, 4);
  const WellSystem before = compute_well_system(st.ifs, st.orbit, st.H, 8);
  // admissible perturbation: a small shear conjugated into the first annulus
  MarkovIfs pert = st.ifs;
  {
    GraphShearField f;
    f.center = s.preparedParams->xiDisc.center * fam.params.lambda;
    f.rotated45 = false;
    f.d = Profile1::from_function(
        [&](double x) {
          const double w = s.preparedParams->xiDisc.radius * fam.params.lambda;
          const double u = x / w;
          return std::abs(u) < 1 ? 2e-4 * cap_profile(u) : 0.0;
        },
        nullptr, -0.014, 0.014, 257);
    f.winLo = -0.005;
    f.winHi = 0.005;
    f.taper = 0.004;
    BumpFlow bf;
    bf.field = f;
    bf.integrationSteps = 32;
    pert.branches[fam.periodicBranch].map =
        pert.branches[fam.periodicBranch].map.then(MapChain::of(bf));
  }
  auto orb2 = find_periodic(pert, Word{{fam.periodicBranch}});
  REQUIRE(orb2.has_value());
  const WellSystem after = compute_well_system(pert, *orb2, st.H, 8);
  Rng rng(23);
  for (int k = 0; k < 400; ++k) {
    const Point2 p(rng.uniform(0.7, 0.9), rng.uniform(-0.05, 0.05));
    for (int n = 0; n < 5; ++n) {
      CHECK(membership(before, WellSet::T, n, p) ==
            membership(after, WellSet::T, n, p));
      CHECK(membership(before, WellSet::Xi, 1, p) ==
            membership(after, WellSet::Xi, 1, p));
    }
  }
}

TEST_CASE("errors: no homoclinic data means indices are undefined") {
  const Scenario s = scenario_annulus();
  const auto orb = find_periodic(s.ifs, Word{{0}});
  REQUIRE(orb.has_value());
  HomoclinicPoint H;
  H.point = Vec2(0.8, 0);
  H.word = Word{{0}};  // not a homoclinic transit: inverse orbit stays at q
  CHECK_THROWS_AS(compute_indices(s.ifs, *orb, H), DomainError);
}

TEST_CASE("ObstructionConflict: components surrounding Xi_1 are rejected") {
  // two obstruction branches on opposite sides of Xi_1 in the same annulus:
  // any enclosing disc of both components must cover Xi_1
  Scenario s = scenario_toy_basic();
  MarkovIfs ifs = s.family().member(2);
  Branch extra;
  extra.dom = 0;
  extra.target = 0;
  Affine a;
  a.matrix = 0.02 * Mat2::Identity();
  a.offset = Vec2(0.74, 0.10);
  extra.map = MapChain::of(a);
  ifs.branches.push_back(extra);
  Branch extra2 = extra;
  Affine a2 = a;
  a2.offset = Vec2(0.86, -0.10);
  extra2.map = MapChain::of(a2);
  ifs.branches.push_back(extra2);
  const auto orb = find_periodic(ifs, s.orbitWord);
  REQUIRE(orb.has_value());
  CHECK_THROWS_AS(compute_well_system(ifs, *orb, *s.homoclinic, 6),
                  ObstructionConflict);
}
