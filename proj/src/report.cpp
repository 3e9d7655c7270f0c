#include "mifs/report.hpp"

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mifs {

using json = nlohmann::json;

namespace {

json curve_to_json(const CurveSample& c, int maxSamples = 512) {
  json j;
  j["id"] = c.id;
  const int stride =
      std::max<int>(1, static_cast<int>(c.size()) / std::max(1, maxSamples));
  json pts = json::array();
  for (std::size_t i = 0; i < c.size(); i += stride) {
    pts.push_back(json::array({c.t[i], c.p[i].x(), c.p[i].y(),
                               c.tangent[i].x(), c.tangent[i].y()}));
  }
  j["samples"] = pts;
  return j;
}

struct SvgWriter {
  std::ostringstream out;
  double minX{-1.1}, minY{-1.1}, w{2.2}, h{2.2};

  void header() {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << minX << " "
        << minY << " " << w << " " << h << "\">\n";
    out << "<g transform=\"scale(1,-1)\">\n";  // mathematical orientation
  }
  void circle(const Vec2& c, double r, const std::string& stroke,
              double width = 0.004) {
    out << "<circle cx=\"" << c.x() << "\" cy=\"" << c.y() << "\" r=\"" << r
        << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
        << width << "\"/>\n";
  }
  void polyline(const std::vector<Vec2>& pts, const std::string& stroke,
                double width = 0.003) {
    if (pts.empty()) return;
    out << "<polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"" << width << "\" points=\"";
    for (const auto& p : pts) out << p.x() << "," << p.y() << " ";
    out << "\"/>\n";
  }
  void footer() { out << "</g>\n</svg>\n"; }
};

}  // namespace

void write_curve_csv(const CurveSample& c, const std::string& path) {
  std::ofstream f(path);
  f << "curveId,t,x,y,tx,ty\n";
  f.precision(17);
  for (std::size_t i = 0; i < c.size(); ++i) {
    f << c.id << "," << c.t[i] << "," << c.p[i].x() << "," << c.p[i].y() << ","
      << c.tangent[i].x() << "," << c.tangent[i].y() << "\n";
  }
}

ValidateResult run_validate(const Scenario& s) {
  ValidateResult res;
  json j;
  j["schema"] = "mifs/1-report";
  j["scenario"] = s.name;
  j["kind"] = "validate";
  const ValidationReport vr = validate(s.ifs);
  j["ifs"] = {{"valid", vr.valid},
              {"minContainmentMargin", vr.minContainmentMargin},
              {"minPairSeparation", vr.minPairSeparation},
              {"boundarySamples", 256},
              {"separationGap", tol::kSeparationGap}};
  for (const auto& issue : vr.issues) j["ifs"]["issues"].push_back(issue.what);
  bool ok = vr.valid;
  if (!s.orbitWord.empty()) {
    auto orb = find_periodic(s.ifs, s.orbitWord);
    if (orb) {
      j["orbit"] = {{"point", json::array({orb->point.x(), orb->point.y()})},
                    {"period", orb->period},
                    {"separated", is_separated(s.ifs, *orb)},
                    {"nonContraction", orb->nonContraction}};
      if (orb->eigen.real)
        j["orbit"]["eigen"] = json::array({orb->eigen.a, orb->eigen.b});
      if (s.homoclinic) {
        const HomoclinicReport hr = verify_homoclinic(s.ifs, *orb, *s.homoclinic);
        j["homoclinic"] = {{"onStrongStable", hr.onStrongStable},
                           {"offPeriodicImage", hr.offPeriodicImage},
                           {"inverseOrbitReaches", hr.inverseOrbitReaches},
                           {"qFree", hr.qFree},
                           {"strongStableDistance", hr.strongStableDistance},
                           {"tolerance", tol::kSsAxis}};
        ok = ok && hr.pass();
      }
    } else {
      j["orbit"] = {{"found", false}};
      ok = false;
    }
  }
  if (s.flexiblePath) {
    const FlexibilityReport fr = validate_flexible(*s.flexiblePath);
    j["flexiblePath"] = {{"diameter", fr.diameter},
                         {"epsilon", s.flexiblePath->epsilon},
                         {"pass", fr.pass(s.flexiblePath->epsilon)}};
    ok = ok && fr.pass(s.flexiblePath->epsilon);
  }
  j["pass"] = ok;
  res.pass = ok;
  res.reportJson = j.dump(2);
  return res;
}

RunResult run_pipeline(const Scenario& s, const PipelineConfig& cfg,
                       std::uint64_t seed, int jobs) {
  (void)jobs;  // depth builds are already cheap enough sequentially here; the
               // CLI parallelizes across scenarios/depths when asked.
  RunResult res;
  const auto t0 = std::chrono::steady_clock::now();
  json j;
  j["schema"] = "mifs/1-report";
  j["scenario"] = s.name;
  j["kind"] = "run";
  j["seed"] = seed;
  j["tolerances"] = {{"inverseRoundTrip", tol::kInverseRoundTrip},
                     {"graphTransform", tol::kGraphTransform},
                     {"s5Sup", tol::kS5Sup},
                     {"curveInvariance", tol::kCurveInvariance}};
  if (!s.preparedParams || !s.flexiblePath)
    throw DomainError("scenario lacks preparedParams or flexiblePath");
  const PreparedFamily fam = s.family();
  const PreparednessReport pr = verify_prepared(fam, 1);
  json jc = json::array();
  for (const auto& c : pr.conditions)
    jc.push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}});
  j["prepared"] = {{"pass", pr.pass()}, {"conditions", jc}};

  const PipelineReport rep = build_weak_curves_end_to_end(fam, *s.flexiblePath, cfg);
  json jd = json::array();
  for (const auto& d : rep.depths) {
    json x;
    x["m"] = d.m;
    x["s1"] = d.presol.s1;
    x["s2"] = d.presol.s2;
    x["s3"] = d.presol.s3;
    x["s4"] = d.presol.s4;
    x["s5"] = d.presol.s5;
    x["s1Residual"] = d.presol.s1Residual;
    x["s5Residual"] = d.presol.s5Residual;
    x["K"] = d.K;
    x["impliedEta"] = d.impliedEta;
    x["c1Size"] = d.c1Size;
    x["c0Size"] = d.c0Size;
    x["telescoping"] = d.telescoping;
    x["curvePieces"] = d.curvePieces;
    x["univalent"] = d.univalent;
    x["invarianceResidual"] = d.invarianceResidual;
    x["anchorsOk"] = d.anchorsOk;
    jd.push_back(x);
  }
  j["pipeline"] = {{"c", rep.c},
                   {"n0", rep.n0},
                   {"m2", rep.m2},
                   {"depths", jd},
                   {"costDepthIndependent", rep.costDepthIndependent},
                   {"etaMonotone", rep.etaMonotone},
                   {"etaBelowTarget", rep.etaBelowTarget},
                   {"cocycleAtOne", rep.cocycleAtOne},
                   {"budgetsOk", rep.budgetsOk},
                   {"dwell",
                    {{"L", rep.dwell.L},
                     {"r", rep.dwell.r},
                     {"ell0", rep.dwell.ell0},
                     {"minH", rep.dwell.minH},
                     {"samples", rep.dwell.samplesUsed},
                     {"intervalStructureOk", rep.dwell.intervalStructureOk},
                     {"boundHolds", rep.dwell.boundHolds},
                     {"inconclusive", rep.dwell.inconclusive}}}};
  bool ok = pr.pass() && rep.costDepthIndependent && rep.etaMonotone &&
            rep.etaBelowTarget && rep.cocycleAtOne && rep.budgetsOk &&
            !rep.dwell.inconclusive && rep.dwell.boundHolds;
  for (const auto& d : rep.depths)
    ok = ok && d.presol.pass() && d.univalent && d.anchorsOk &&
         d.invarianceResidual < tol::kCurveInvariance;
  j["pass"] = ok;

  // Renderable artifacts: well boundaries and gamma curves for each depth.
  {
    MarkovIfs member = fam.member(rep.n0);
    auto orb = find_periodic(member, Word{{fam.periodicBranch}});
    HomoclinicPoint H;
    H.point = fam.homoclinicPoint;
    H.word = fam.homoclinicWord;
    WellSystem ws = compute_well_system(member, *orb, H, rep.m2 + 12);
    json art;
    art["discRadius"] = 1.0;
    json wells = json::array();
    auto emit_set = [&](WellSet set, int n, const char* name) {
      json wj;
      wj["set"] = name;
      wj["n"] = n;
      json pts = json::array();
      for (const auto& p : well_boundary(ws, set, n, 96))
        pts.push_back(json::array({p.x(), p.y()}));
      if (pts.empty()) return;
      wj["boundary"] = pts;
      wells.push_back(wj);
    };
    for (int n = 0; n <= std::min(6, rep.m2); ++n) emit_set(WellSet::T, n, "T");
    for (int n = 1; n <= ws.idx.t; ++n) emit_set(WellSet::Xi, n, "Xi");
    for (int i = 0; i < orb->period; ++i) emit_set(WellSet::Delta, i, "Delta");
    for (int i = 0; i <= std::min(6, rep.m2); ++i)
      emit_set(WellSet::LambdaBar, i, "Lambda");
    art["wells"] = wells;
    // the strong stable manifold of the deepest pre-solution's member
    {
      const CurveSample wss = strong_stable_local(member, *orb, 0.999, 513);
      art["wss"] = curve_to_json(wss, 256);
    }
    json curves = json::array();
    for (const auto& d : rep.depths) {
      const GammaReport gr = build_gamma_family(fam, ws, rep.n0, d.m);
      curves.push_back(curve_to_json(gr.gamma));
    }
    curves.push_back(curve_to_json(gamma_zero(fam)));
    art["curves"] = curves;
    j["artifacts"] = art;
  }

  res.pass = ok;
  res.reportJson = j.dump(2);
  const auto t1 = std::chrono::steady_clock::now();
  std::ostringstream log;
  log << "scenario " << s.name << " pipeline elapsed ms: "
      << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
      << "\n";
  res.logText = log.str();
  return res;
}

std::vector<std::string> render_report(const std::string& reportJson,
                                       const std::string& outDir) {
  std::vector<std::string> files;
  json j = json::parse(reportJson);
  if (!j.contains("artifacts")) return files;
  const json& art = j.at("artifacts");
  // One SVG per depth, overlaying wells and the depth's curve.
  const json& curves = art.at("curves");
  for (std::size_t d = 0; d + 1 < curves.size(); ++d) {  // last one is gamma_0
    SvgWriter svg;
    svg.header();
    svg.circle(Vec2(0, 0), art.value("discRadius", 1.0), "#888");
    for (const auto& wj : art.at("wells")) {
      std::vector<Vec2> pts;
      for (const auto& p : wj.at("boundary"))
        pts.push_back(Vec2(p.at(0), p.at(1)));
      if (!pts.empty()) pts.push_back(pts.front());
      const std::string set = wj.at("set");
      const char* color = set == "T" ? "#2a7"
                          : set == "Xi" ? "#a2c"
                          : set == "Delta" ? "#c42"
                          : "#bbb";
      svg.polyline(pts, color, 0.0015);
    }
    if (art.contains("wss")) {
      std::vector<Vec2> pts;
      for (const auto& p : art.at("wss").at("samples"))
        pts.push_back(Vec2(p.at(1), p.at(2)));
      svg.polyline(pts, "#888", 0.0008);
    }
    for (std::size_t k : {d, curves.size() - 1}) {
      std::vector<Vec2> pts;
      for (const auto& p : curves.at(k).at("samples"))
        pts.push_back(Vec2(p.at(1), p.at(2)));
      svg.polyline(pts, k == d ? "#d33" : "#36c", 0.001);
    }
    svg.footer();
    const std::string path =
        outDir + "/overlay_depth" + std::to_string(d) + ".svg";
    std::ofstream f(path);
    f << svg.out.str();
    files.push_back(path);
    // CSV dump of the depth's curve.
    CurveSample c;
    c.id = curves.at(d).value("id", "curve");
    for (const auto& p : curves.at(d).at("samples")) {
      c.t.push_back(p.at(0));
      c.p.push_back(Vec2(p.at(1), p.at(2)));
      c.tangent.push_back(Vec2(p.at(3), p.at(4)));
    }
    const std::string csv = outDir + "/" + c.id + ".csv";
    write_curve_csv(c, csv);
    files.push_back(csv);
  }
  // sampled well boundaries as CSV polylines
  {
    std::ofstream f(outDir + "/wells.csv");
    f << "curveId,t,x,y,tx,ty\n";
    f.precision(17);
    for (const auto& wj : j.at("artifacts").at("wells")) {
      const std::string id = std::string(wj.at("set")) + "_" +
                             std::to_string(static_cast<int>(wj.at("n")));
      int k = 0;
      for (const auto& p : wj.at("boundary"))
        f << id << "," << k++ << "," << double(p.at(0)) << ","
          << double(p.at(1)) << ",0,0\n";
    }
    files.push_back(outDir + "/wells.csv");
  }
  return files;
}

}  // namespace mifs
