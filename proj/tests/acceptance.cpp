// Acceptance suite: one line per criterion, exit nonzero on any failure.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mifs/report.hpp"

using namespace mifs;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void line(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", idx,
              name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- criterion 1: IFS soundness on the five bundled scenarios -------------
void criterion1() {
  double worstRt = 0.0, worstSep = 1e300;
  bool ok = true;
  for (const auto& name : bundled_scenario_names()) {
    const Scenario s = bundled_scenario(name);
    Rng rng(101);
    int used = 0;
    while (used < 1000) {
      const std::size_t b = rng.next_u64() % s.ifs.branches.size();
      const Round dom = s.ifs.discs[s.ifs.branches[b].dom].round();
      const Point2 p = dom.center + dom.radius * 0.97 *
                                        Vec2(rng.uniform(-1, 1),
                                             rng.uniform(-1, 1));
      if ((p - dom.center).norm() > dom.radius * 0.97) continue;
      const Point2 q = apply_inverse(s.ifs.branches[b].map,
                                     apply(s.ifs.branches[b].map, p));
      worstRt = std::max(worstRt, (q - p).norm());
      ++used;
    }
    const auto rep = validate(s.ifs);
    ok = ok && rep.valid;
    if (s.ifs.branches.size() > 1)
      worstSep = std::min(worstSep, rep.minPairSeparation);
  }
  ok = ok && worstRt < tol::kInverseRoundTrip &&
       worstSep >= tol::kSeparationGap;
  line(1, "markov ifs soundness", ok,
       "roundTrip=" + fmt(worstRt) + " sep=" + fmt(worstSep));
}

// ---- criterion 2: refinement functoriality --------------------------------
void criterion2() {
  bool ok = true;
  for (const auto& name : bundled_scenario_names()) {
    const Scenario s = bundled_scenario(name);
    const auto base = enumerate_periodic(s.ifs, 3);
    for (int n : {1, 2, 3}) {
      const MarkovIfs r = refine(s.ifs, n);
      const auto ref = enumerate_periodic(r, 3);
      for (const auto& orb : base) {
        bool found = false;
        for (const auto& o2 : ref)
          for (const auto& p2 : o2.points)
            if ((p2 - orb.point).norm() < 1e-9 && o2.period == orb.period)
              found = true;
        ok = ok && found;
      }
      // large-stable certificate is refinement-invariant on the orbit of q
      if (!s.orbitWord.empty() && name != std::string("weak_core")) {
        auto o1 = find_periodic(s.ifs, s.orbitWord);
        auto o2 = find_periodic(r, s.orbitWord);
        if (o1 && o2) {
          const auto c1 = large_stable_certificate(s.ifs, *o1, 10, 60, 0.12);
          const auto c2 = large_stable_certificate(r, *o2, 10, 60, 0.12);
          ok = ok && c1.pass == c2.pass;
        }
      }
    }
  }
  line(2, "refinement functoriality", ok, "n in {1,2,3}, 5 scenarios");
}

// ---- criterion 3: relatively repelling lemmas ------------------------------
void criterion3() {
  const Scenario s = scenario_annulus();
  const Region R = Region::annulus(0, Vec2(0, 0), 0.25, 1.0, true);
  const RepellingReport r0 = check_relatively_repelling(s.ifs, R, 64);
  bool ok = r0.pass && std::abs(r0.minMargin - 0.25) < 1e-9;
  for (int n : {1, 2, 3}) {
    const Region Rn = repelling_iterate(s.ifs, R, n);
    ok = ok && check_relatively_repelling(s.ifs, Rn, 48).pass;
    const MarkovIfs refined = refine(s.ifs, n);
    const double rn = std::pow(0.5, n);
    const Region Rref = Region::annulus(0, Vec2(0, 0), 0.25 * rn, rn, true);
    const Region lifted = lift_from_refinement(s.ifs, Rref, n);
    ok = ok && check_relatively_repelling(s.ifs, lifted, 48).pass;
  }
  line(3, "relatively repelling lemmas", ok,
       "annulus margin=" + fmt(r0.minMargin));
}

// ---- criterion 4: flexible cocycle validator -------------------------------
void criterion4() {
  bool ok = true;
  const FlexiblePath canon = canonical_flexible_path(4, 0.5, 0.3);
  ok = ok && validate_flexible(canon).pass(0.3);
  // diag(0.5, 0.75+0.25t): threshold at diameter 0.5
  FlexiblePath fp;
  fp.epsilon = 1.0;
  for (int i = 0; i < 201; ++i) {
    const double t = -1.0 + 2.0 * i / 200.0;
    Cocycle c;
    Mat2 m = Mat2::Zero();
    m(0, 0) = 0.5;
    m(1, 1) = 0.75 + 0.25 * t;
    c.matrices.push_back(m);
    fp.samples.push_back({t, c});
  }
  const FlexibilityReport rep = validate_flexible(fp);
  ok = ok && rep.pass(0.5 + 1e-6) && !rep.pass(0.5 - 1e-6) &&
       std::abs(rep.diameter - 0.5) < 1e-6;
  line(4, "flexible cocycle validator", ok,
       "threshold=" + fmt(rep.diameter));
}

// ---- criterion 5: fragmentation lemma --------------------------------------
void criterion5() {
  const GraphCurve g = GraphCurve::from_function(
      [](double x) {
        const double s = x / 0.9;
        return std::abs(s) >= 1.0 ? 0.0 : 0.28 * cap_profile(s);
      },
      [](double x) {
        const double s = x / 0.9;
        return std::abs(s) >= 1.0 ? 0.0 : 0.28 * cap_profile_d(s) / 0.9;
      },
      0.5, 0.1, 4097);
  const CostCertificate cert = fragment_graph(g, 0.1);
  bool ok = cert.lazy();
  // support bound: exact sweep over every factor via the extremal layer
  ok = ok && boufra_max_support_diameter(g, cert.n) <= 0.1;
  // sampled C1 on a seeded factor sample
  Rng rng(5);
  double worstC1 = 0.0;
  for (int t = 0; t < 64 && ok; ++t) {
    const SmallDiffeo sd =
        cert.factor(static_cast<long long>(rng.next_double() * (cert.K - 1)));
    ok = ok && sd.supportDiameter <= 0.1;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const Vec2 off(-0.7 + 0.45 * a, -0.7 + 0.45 * b);
        const Point2 p = sd.supportDisc.center + sd.supportDisc.radius * off;
        worstC1 = std::max(
            worstC1, op_norm(jacobian(sd.chain, p) - Mat2::Identity()));
      }
  }
  ok = ok && worstC1 <= 0.1 && cert.compositionError < 1e-6;
  line(5, "fragmentation lemma", ok,
       "n=" + std::to_string(cert.n) + " K=" + std::to_string(cert.K) +
           " c1=" + fmt(worstC1) + " comp=" + fmt(cert.compositionError));
}

// state shared by 6-9 --------------------------------------------------------
struct PipeState {
  Scenario s;
  PreparedFamily fam;
  PipelineReport rep;
};
PipeState* g_pipe = nullptr;

void criterion6() {
  // cost depth-independence on the pipeline scenario for n = 1 and n = 2
  const Scenario s = scenario_pipeline();
  const PreparedFamily fam = s.family();
  bool ok = true;
  std::string detail;
  for (int n : {1, 2}) {
    MarkovIfs member = fam.member(n);
    auto orb = find_periodic(member, Word{{fam.periodicBranch}});
    WellSystem ws = compute_well_system(member, *orb, *s.homoclinic, 40);
    long long k0 = -1;
    const int m2 = fam.tauOf(n) + 3;
    for (int m : {m2, m2 + 5, m2 + 10}) {
      const GammaReport gr = build_gamma_family(fam, ws, n, m);
      ok = ok && gr.pass();
      const CostCertificate c =
          eta_cost(gr.gamma, gamma_zero(fam), fam.params.xiDisc,
                   s.pipeline.etaCost);
      if (k0 < 0) {
        k0 = c.K;
        detail += "K(n=" + std::to_string(n) + ")=" + std::to_string(c.K) + " ";
      }
      ok = ok && c.K == k0;
    }
  }
  line(6, "cost depth-independence", ok, detail);
}

void criterion7() {
  bool ok = g_pipe != nullptr;
  std::string detail;
  if (ok) {
    const PipelineReport& rep = g_pipe->rep;
    ok = rep.costDepthIndependent && rep.budgetsOk && rep.admissible;
    for (const auto& d : rep.depths) {
      ok = ok && d.presol.pass() && d.telescoping < 1e-9 &&
           d.c1Size <= 0.05;
      detail += "m=" + std::to_string(d.m) + ":S1-5 " +
                (d.presol.pass() ? "ok" : "FAIL") + " ";
    }
  }
  line(7, "pre-solutions S1-S5", ok, detail);
}

void criterion8() {
  bool ok = g_pipe != nullptr;
  double worstInv = 0.0;
  if (ok) {
    for (const auto& d : g_pipe->rep.depths) {
      ok = ok && d.univalent && d.anchorsOk;
      worstInv = std::max(worstInv, d.invarianceResidual);
    }
    ok = ok && worstInv < tol::kCurveInvariance;
  }
  line(8, "univalent invariant curves", ok, "invariance=" + fmt(worstInv));
}

void criterion9() {
  bool ok = g_pipe != nullptr;
  std::string detail;
  if (ok) {
    const PipelineReport& rep = g_pipe->rep;
    ok = rep.etaMonotone && rep.etaBelowTarget;
    for (const auto& d : rep.depths) detail += fmt(d.impliedEta) + " ";
    detail += "target=" + fmt(g_pipe->s.pipeline.etaTarget);
    ok = ok && !rep.dwell.inconclusive && rep.dwell.intervalStructureOk &&
         rep.dwell.boundHolds && rep.dwell.samplesUsed >= 200;
    detail += " dwell minH=" + std::to_string(rep.dwell.minH) + "/r*L=" +
              fmt(rep.dwell.r * rep.dwell.L);
  }
  line(9, "weakness trend and dwell bound", ok, detail);
}

void criterion10() {
  // two-stage scaling on the weak-core scenario
  const Scenario w = scenario_weak_core();
  const auto orb = find_periodic(w.ifs, Word{{0}});
  InvariantCurveFamily axis;
  CurvePiece cp;
  cp.curve = strong_stable_local(w.ifs, *orb, 0.999, 513);
  cp.hasOrbitPoint = true;
  axis.pieces.push_back(cp);
  const double eta = 0.1;
  bool ok = true;
  std::string detail;
  try {
    const RepellerAttractor ra = build_repeller_attractor(w.ifs, axis, eta);
    ok = ra.repelling.pass && ra.repelling.minMargin > 0.0 &&
         ra.attractorDichotomy && ra.uniformContractionNorm < 1.0 &&
         ra.k1 <= 3 && ra.totalC1 <= 12.0 * eta;
    // bit-identical first return near q
    Rng rng(3);
    for (int i = 0; i < 128; ++i) {
      const Point2 p(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
      const Point2 a = apply(ra.identityAtQ.branches[0].map, p);
      const Point2 b = apply(w.ifs.branches[0].map, p);
      if (a.x() != b.x() || a.y() != b.y()) ok = false;
    }
    detail = "margin=" + fmt(ra.repelling.minMargin) +
             " |DH|=" + fmt(ra.uniformContractionNorm) +
             " k1=" + std::to_string(ra.k1) + " c1=" + fmt(ra.totalC1);
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  line(10, "repeller/attractor synthesis", ok, detail);
}

void criterion11(const char* cliPath) {
  // determinism: two runs of cmd_run produce byte-identical reports
  bool ok = true;
  std::string detail;
  const fs::path tmp = fs::temp_directory_path() / "mifs_acceptance";
  fs::create_directories(tmp);
  const fs::path scen = tmp / "toy_basic.json";
  save_scenario(scenario_toy_basic(), scen.string());
  for (int run = 0; run < 2; ++run) {
    const fs::path out = tmp / ("run" + std::to_string(run));
    std::ostringstream cmd;
    cmd << "MIFS_SEED=42 " << cliPath << " run " << scen << " --out " << out
        << " > /dev/null 2>&1";
    const int rc = std::system(cmd.str().c_str());
    if (rc != 0) {
      ok = false;
      detail = "cli exit " + std::to_string(rc);
    }
  }
  if (ok) {
    auto read = [](const fs::path& p) {
      std::ifstream f(p);
      std::stringstream ss;
      ss << f.rdbuf();
      return ss.str();
    };
    const std::string a = read(tmp / "run0" / "report.json");
    const std::string b = read(tmp / "run1" / "report.json");
    ok = !a.empty() && a == b;
    detail = "bytes=" + std::to_string(a.size());
  }
  line(11, "determinism", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const char* cliPath = argc > 1 ? argv[1] : "./mifs";
  std::printf("acceptance suite (tolerances pinned in mifs/common.hpp)\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  // pipeline state for criteria 7-9
  try {
    static PipeState st{scenario_pipeline(), scenario_pipeline().family(), {}};
    st.rep = build_weak_curves_end_to_end(st.fam, *st.s.flexiblePath,
                                          st.s.pipeline);
    g_pipe = &st;
  } catch (const std::exception& e) {
    std::printf("pipeline construction failed: %s\n", e.what());
  }
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11(cliPath);
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
