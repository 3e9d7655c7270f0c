#include "mifs/scenario.hpp"

#include <fstream>
#include <json.hpp>

namespace mifs {

using json = nlohmann::json;

namespace {

json vec_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec_from_json(const json& j) { return Vec2(j.at(0), j.at(1)); }

json mat_to_json(const Mat2& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}),
                      json::array({m(1, 0), m(1, 1)})});
}
Mat2 mat_from_json(const json& j) {
  Mat2 m;
  m << j.at(0).at(0), j.at(0).at(1), j.at(1).at(0), j.at(1).at(1);
  return m;
}

json field_to_json(const VectorField& f) {
  json j;
  if (std::holds_alternative<ZeroField>(f)) {
    j["kind"] = "zero";
  } else if (const auto* c = std::get_if<CoreNeutralizerField>(&f)) {
    j["kind"] = "core_neutralizer";
    j["lambda"] = c->lambda;
    j["scale"] = c->scale;
    j["u1r"] = c->u1r;
    j["u2r"] = c->u2r;
    j["v0r"] = c->v0r;
  } else if (const auto* r = std::get_if<MatrixRampField>(&f)) {
    j["kind"] = "matrix_ramp";
    j["L"] = mat_to_json(r->L);
    j["rIn"] = r->rIn;
    j["rOut"] = r->rOut;
    j["center"] = vec_to_json(r->center);
  } else {
    throw SchemaError("field kind not serializable in scenario files");
  }
  return j;
}

VectorField field_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "zero") return ZeroField{};
  if (kind == "core_neutralizer") {
    CoreNeutralizerField c;
    c.lambda = j.at("lambda");
    c.scale = j.at("scale");
    c.u1r = j.value("u1r", 0.72);
    c.u2r = j.value("u2r", 0.82);
    c.v0r = j.value("v0r", 0.2);
    return c;
  }
  if (kind == "matrix_ramp") {
    MatrixRampField r;
    r.L = mat_from_json(j.at("L"));
    r.rIn = j.at("rIn");
    r.rOut = j.at("rOut");
    r.center = vec_from_json(j.at("center"));
    return r;
  }
  throw SchemaError("unknown field kind: " + kind);
}

json primitive_to_json(const Primitive& p) {
  json j;
  if (const auto* a = std::get_if<Affine>(&p)) {
    j["type"] = "Affine";
    j["matrix"] = mat_to_json(a->matrix);
    j["offset"] = vec_to_json(a->offset);
  } else if (const auto* h = std::get_if<Homothety>(&p)) {
    j["type"] = "Homothety";
    j["factor"] = h->factor;
    j["center"] = vec_to_json(h->center);
  } else if (const auto* d = std::get_if<DiagonalSaddleNode>(&p)) {
    j["type"] = "DiagonalSaddleNode";
    j["lambda0"] = d->lambda0;
    j["k"] = {{"type", "cubic"}, {"a", d->k.a}, {"ycap", d->k.ycap}};
  } else if (const auto* b = std::get_if<BumpFlow>(&p)) {
    j["type"] = "BumpFlow";
    j["integrationSteps"] = b->integrationSteps;
    j["vectorField"] = field_to_json(b->field);
  } else {
    throw SchemaError("NormalScalingFlow primitives are not scenario data");
  }
  return j;
}

Primitive primitive_from_json(const json& j) {
  const std::string type = j.at("type");
  if (type == "Affine") {
    Affine a;
    a.matrix = mat_from_json(j.at("matrix"));
    a.offset = vec_from_json(j.at("offset"));
    return a;
  }
  if (type == "Homothety") {
    Homothety h;
    h.factor = j.at("factor");
    h.center = vec_from_json(j.at("center"));
    return h;
  }
  if (type == "DiagonalSaddleNode") {
    DiagonalSaddleNode d;
    d.lambda0 = j.at("lambda0");
    d.k.a = j.at("k").at("a");
    d.k.ycap = j.at("k").at("ycap");
    return d;
  }
  if (type == "BumpFlow") {
    BumpFlow b;
    b.integrationSteps = j.at("integrationSteps");
    b.field = field_from_json(j.at("vectorField"));
    return b;
  }
  throw SchemaError("unknown primitive type: " + type);
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = "mifs/1";
  j["name"] = s.name;
  j["discs"] = json::array();
  for (const auto& d : s.ifs.discs) {
    if (!d.is_round()) throw SchemaError("only round discs are scenario data");
    j["discs"].push_back({{"center", vec_to_json(d.round().center)},
                          {"radius", d.round().radius}});
  }
  j["branches"] = json::array();
  for (const auto& b : s.ifs.branches) {
    json jb;
    jb["dom"] = b.dom;
    jb["target"] = b.target;
    jb["map"] = json::array();
    for (const auto& p : b.map.primitives) jb["map"].push_back(primitive_to_json(p));
    j["branches"].push_back(jb);
  }
  j["orbitWord"] = s.orbitWord.letters;
  if (s.homoclinic) {
    j["homoclinic"] = {{"point", vec_to_json(s.homoclinic->point)},
                       {"word", s.homoclinic->word.letters},
                       {"transitSteps", s.homoclinic->transitSteps}};
  }
  if (s.flexiblePath) {
    // diagonal-ladder paths only (the scenario construction)
    const FlexiblePath& fp = *s.flexiblePath;
    const std::size_t n = fp.length();
    json jp;
    jp["epsilon"] = fp.epsilon;
    jp["kind"] = "diagonal_ladder";
    jp["n"] = n;
    jp["a"] = fp.at(0.0).matrices[0](0, 0);
    jp["bMinus1"] = fp.at(-1.0).matrices[0](1, 1);
    jp["bZero"] = fp.at(0.0).matrices[0](1, 1);
    jp["bOne"] = fp.at(1.0).matrices[0](1, 1);
    jp["tSamples"] = fp.samples.size();
    j["flexiblePath"] = jp;
  }
  if (s.preparedParams) {
    const PreparedParams& p = *s.preparedParams;
    json jp;
    jp["lambda"] = p.lambda;
    jp["lambdas"] = p.lambdas;
    jp["lambdaStars"] = p.lambdaStars;
    jp["tau"] = p.tau;
    jp["tauPrime"] = p.tauPrime;
    jp["betaRects"] = json::array();
    for (const auto& r : p.betaRects)
      jp["betaRects"].push_back(
          {{"xmin", r.xmin}, {"xmax", r.xmax}, {"ymin", r.ymin}, {"ymax", r.ymax}});
    jp["xiDisc"] = {{"center", vec_to_json(p.xiDisc.center)},
                    {"radius", p.xiDisc.radius}};
    jp["deltaDiscs"] = json::array();
    for (const auto& d : p.deltaDiscs)
      jp["deltaDiscs"].push_back(
          {{"center", vec_to_json(d.center)}, {"radius", d.radius}});
    jp["core"] = {{"u1r", p.core.u1r},
                  {"u2r", p.core.u2r},
                  {"v0r", p.core.v0r},
                  {"integrationSteps", p.core.integrationSteps}};
    j["preparedParams"] = jp;
  }
  if (s.hasPipeline) {
    j["pipeline"] = {{"eps", s.pipeline.eps},
                     {"eps0", s.pipeline.eps0},
                     {"eta", s.pipeline.etaTarget},
                     {"etaCost", s.pipeline.etaCost},
                     {"depths", s.pipeline.depthOffsets},
                     {"dwellL", s.pipeline.dwellL},
                     {"dwellW", s.pipeline.dwellW}};
  }
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (j.value("schema", "") != "mifs/1")
    throw SchemaError("missing or unsupported schema tag (want mifs/1)");
  Scenario s;
  s.name = j.value("name", "scenario");
  for (const auto& jd : j.at("discs")) {
    Disc d;
    d.shape = Round{vec_from_json(jd.at("center")), jd.at("radius")};
    s.ifs.discs.push_back(d);
  }
  for (const auto& jb : j.at("branches")) {
    Branch b;
    b.dom = jb.at("dom");
    b.target = jb.at("target");
    if (b.dom < 0 || b.dom >= static_cast<int>(s.ifs.discs.size()) ||
        b.target < 0 || b.target >= static_cast<int>(s.ifs.discs.size()))
      throw SchemaError("branch disc index out of range");
    for (const auto& jp : jb.at("map"))
      b.map.primitives.push_back(primitive_from_json(jp));
    s.ifs.branches.push_back(std::move(b));
  }
  if (j.contains("orbitWord"))
    s.orbitWord.letters = j.at("orbitWord").get<std::vector<int>>();
  for (int l : s.orbitWord.letters)
    if (l < 0 || l >= static_cast<int>(s.ifs.branches.size()))
      throw SchemaError("orbit word letter out of range");
  if (j.contains("homoclinic")) {
    HomoclinicPoint h;
    h.point = vec_from_json(j.at("homoclinic").at("point"));
    h.word.letters = j.at("homoclinic").at("word").get<std::vector<int>>();
    h.transitSteps = j.at("homoclinic").value("transitSteps", 0);
    for (int l : h.word.letters)
      if (l < 0 || l >= static_cast<int>(s.ifs.branches.size()))
        throw SchemaError("homoclinic word letter out of range");
    s.homoclinic = h;
  }
  if (j.contains("flexiblePath")) {
    const json& jp = j.at("flexiblePath");
    if (jp.value("kind", "") != "diagonal_ladder")
      throw SchemaError("unknown flexible path kind");
    const int n = jp.at("n");
    const double a = jp.at("a");
    const double bm1 = jp.at("bMinus1");
    const double b0 = jp.at("bZero");
    const double b1 = jp.at("bOne");
    const int samples = jp.value("tSamples", 201);
    FlexiblePath fp;
    fp.epsilon = jp.at("epsilon");
    for (int i = 0; i < samples; ++i) {
      const double t = -1.0 + 2.0 * i / (samples - 1);
      const double b = t <= 0 ? bm1 + (b0 - bm1) * (t + 1) : b0 + (b1 - b0) * t;
      Cocycle c;
      for (int k = 0; k < n; ++k) {
        Mat2 m = Mat2::Zero();
        m(0, 0) = a;
        m(1, 1) = b;
        c.matrices.push_back(m);
      }
      fp.samples.push_back({t, c});
    }
    s.flexiblePath = fp;
  }
  if (j.contains("preparedParams")) {
    const json& jp = j.at("preparedParams");
    PreparedParams p;
    p.lambda = jp.at("lambda");
    p.lambdas = jp.at("lambdas").get<std::vector<double>>();
    p.lambdaStars = jp.at("lambdaStars").get<std::vector<double>>();
    p.tau = jp.at("tau");
    p.tauPrime = jp.value("tauPrime", 0);
    for (const auto& jr : jp.at("betaRects"))
      p.betaRects.push_back(
          {jr.at("xmin"), jr.at("xmax"), jr.at("ymin"), jr.at("ymax")});
    p.xiDisc = Round{vec_from_json(jp.at("xiDisc").at("center")),
                     jp.at("xiDisc").at("radius")};
    for (const auto& jd : jp.at("deltaDiscs"))
      p.deltaDiscs.push_back(
          Round{vec_from_json(jd.at("center")), jd.at("radius")});
    p.core.u1r = jp.at("core").at("u1r");
    p.core.u2r = jp.at("core").at("u2r");
    p.core.v0r = jp.at("core").at("v0r");
    p.core.integrationSteps = jp.at("core").at("integrationSteps");
    s.preparedParams = p;
  }
  if (j.contains("pipeline")) {
    const json& jp = j.at("pipeline");
    s.hasPipeline = true;
    s.pipeline.eps = jp.at("eps");
    s.pipeline.eps0 = jp.at("eps0");
    s.pipeline.etaTarget = jp.at("eta");
    s.pipeline.etaCost = jp.at("etaCost");
    s.pipeline.depthOffsets = jp.at("depths").get<std::vector<int>>();
    s.pipeline.dwellL = jp.value("dwellL", 40);
    s.pipeline.dwellW = jp.value("dwellW", 0.6);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return scenario_from_json(text);
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  out << scenario_to_json(s) << "\n";
}

PreparedFamily Scenario::family() const {
  if (!preparedParams)
    throw DomainError("scenario carries no prepared parameters");
  return build_prepared(*preparedParams);
}

namespace {

Scenario prepared_scenario(const std::string& name, double lambda, double xiX,
                           double xiR, const Vec2& deltaC, double deltaR,
                           double u1r, double u2r) {
  Scenario s;
  s.name = name;
  PreparedParams p;
  p.lambda = lambda;
  p.lambdas = {1.0, lambda};
  p.lambdaStars = {0.93};
  p.tau = 2;
  p.betaRects = {{0.72, 0.93, -0.16, 0.16}};
  p.xiDisc = Round{Vec2(xiX, 0.0), xiR};
  p.deltaDiscs = {Round{deltaC, deltaR}};
  p.core.u1r = u1r;
  p.core.u2r = u2r;
  p.core.v0r = 0.2;
  p.core.integrationSteps = 256;
  s.preparedParams = p;
  const PreparedFamily fam = build_prepared(p);
  s.ifs = fam.base;  // member 1
  s.orbitWord = Word{{fam.periodicBranch}};
  HomoclinicPoint h;
  h.point = p.xiDisc.center;
  h.word = fam.homoclinicWord;
  h.transitSteps = 1;
  s.homoclinic = h;
  FlexiblePath fp;
  fp.epsilon = (1.0 - lambda) + 0.1;
  const int samples = 201;
  for (int i = 0; i < samples; ++i) {
    const double t = -1.0 + 2.0 * i / (samples - 1);
    const double b = lambda + (1.0 - lambda) * (t + 1.0) / 2.0;
    Cocycle c;
    Mat2 m = Mat2::Zero();
    m(0, 0) = lambda;
    m(1, 1) = b;
    c.matrices.push_back(m);
    fp.samples.push_back({t, c});
  }
  s.flexiblePath = fp;
  return s;
}

}  // namespace

Scenario scenario_toy_basic() {
  Scenario s = prepared_scenario("toy_basic", 0.5, 0.8, 0.02,
                                 Vec2(0.78, -0.12), 0.03, 0.52, 0.66);
  s.hasPipeline = true;
  s.pipeline.eps = 0.55;
  s.pipeline.eps0 = 0.05;
  s.pipeline.etaTarget = 0.75;
  s.pipeline.etaCost = 0.3;
  s.pipeline.depthOffsets = {0, 2};
  s.pipeline.dwellL = 12;
  s.pipeline.dwellW = 0.2;
  return s;
}

Scenario scenario_pipeline() {
  Scenario s = prepared_scenario("pipeline", 0.7, 0.78, 0.02, Vec2(0.84, -0.12),
                                 0.03, 0.72, 0.82);
  s.hasPipeline = true;
  s.pipeline.eps = 0.4;
  s.pipeline.eps0 = 0.05;
  s.pipeline.etaTarget = 0.35;
  s.pipeline.etaCost = 0.05;
  s.pipeline.depthOffsets = {0, 5, 10};
  s.pipeline.dwellL = 40;
  s.pipeline.dwellW = 0.6;
  return s;
}

Scenario scenario_two_disc() {
  Scenario s;
  s.name = "two_disc";
  // Two discs; the transit passes through the second one (frak t = 2).
  PreparedParams p;
  p.lambda = 0.5;
  p.lambdas = {1.0, 0.5};
  p.lambdaStars = {0.93};
  p.tau = 2;
  p.betaRects = {{0.72, 0.93, -0.16, 0.16}};
  p.xiDisc = Round{Vec2(0.8, 0.0), 0.04};
  p.deltaDiscs = {Round{Vec2(0.78, -0.12), 0.03}};
  p.core.u1r = 0.52;
  p.core.u2r = 0.66;
  p.core.v0r = 0.2;
  p.core.integrationSteps = 256;
  const PreparedFamily fam = build_prepared(p);

  Disc d1;
  d1.shape = Round{Vec2(0, 0), 1.0};
  Disc d2;
  d2.shape = Round{Vec2(3, 0), 1.0};
  s.ifs.discs = {d1, d2};
  Branch member;
  member.dom = 0;
  member.target = 0;
  member.map = fam.memberReturnMap(1);
  s.ifs.branches.push_back(member);
  Branch out;  // D1 -> D2
  out.dom = 0;
  out.target = 1;
  Affine ao;
  ao.matrix = 0.05 * Mat2::Identity();
  ao.offset = Vec2(3, 0);
  out.map = MapChain::of(ao);
  s.ifs.branches.push_back(out);
  Branch back;  // D2 -> D1, image = Xi_1
  back.dom = 1;
  back.target = 0;
  Affine ab;
  ab.matrix = 0.04 * Mat2::Identity();
  ab.offset = Vec2(0.8, 0.0) - 0.04 * Vec2(3, 0);
  back.map = MapChain::of(ab);
  s.ifs.branches.push_back(back);
  Branch spur;  // D1 -> D2, second image makes Theta_1 non-empty
  spur.dom = 0;
  spur.target = 1;
  Affine as;
  as.matrix = 0.03 * Mat2::Identity();
  as.offset = Vec2(3.3, 0.3);
  spur.map = MapChain::of(as);
  s.ifs.branches.push_back(spur);
  Branch delta;  // D1 -> D1 obstruction
  delta.dom = 0;
  delta.target = 0;
  Affine ad;
  ad.matrix = 0.03 * Mat2::Identity();
  ad.offset = Vec2(0.78, -0.12);
  delta.map = MapChain::of(ad);
  s.ifs.branches.push_back(delta);

  s.orbitWord = Word{{0}};
  HomoclinicPoint h;
  h.point = Vec2(0.8, 0.0);
  h.word = Word{{1, 2}};
  h.transitSteps = 2;
  s.homoclinic = h;
  return s;
}

Scenario scenario_weak_core() {
  Scenario s;
  s.name = "weak_core";
  Disc d;
  d.shape = Round{Vec2(0, 0), 1.0};
  s.ifs.discs.push_back(d);
  Branch b;
  b.dom = 0;
  b.target = 0;
  DiagonalSaddleNode sn;
  sn.lambda0 = 0.5;
  sn.k.a = 1.0;
  sn.k.ycap = 0.55;
  b.map = MapChain::of(sn);
  s.ifs.branches.push_back(b);
  s.orbitWord = Word{{0}};
  return s;
}

Scenario scenario_annulus() {
  Scenario s;
  s.name = "annulus";
  Disc d;
  d.shape = Round{Vec2(0, 0), 1.0};
  s.ifs.discs.push_back(d);
  Branch b;
  b.dom = 0;
  b.target = 0;
  Homothety h;
  h.factor = 0.5;
  b.map = MapChain::of(h);
  s.ifs.branches.push_back(b);
  s.orbitWord = Word{{0}};
  return s;
}

std::vector<std::string> bundled_scenario_names() {
  return {"toy_basic", "pipeline", "two_disc", "weak_core", "annulus"};
}

Scenario bundled_scenario(const std::string& name) {
  if (name == "toy_basic") return scenario_toy_basic();
  if (name == "pipeline") return scenario_pipeline();
  if (name == "two_disc") return scenario_two_disc();
  if (name == "weak_core") return scenario_weak_core();
  if (name == "annulus") return scenario_annulus();
  throw SchemaError("unknown bundled scenario: " + name);
}

}  // namespace mifs
