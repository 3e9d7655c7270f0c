#include "mifs/markov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mifs {

bool Word::primitive() const {
  const std::size_t n = letters.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    bool rep = true;
    for (std::size_t i = d; i < n && rep; ++i) rep = letters[i] == letters[i - d];
    if (rep) return false;
  }
  return true;
}

bool MarkovIfs::disc_contains(int d, const Point2& p, double slack) const {
  const Disc& disc = discs.at(d);
  if (disc.is_round()) return disc.round().contains(p, slack);
  const ImageDisc& im = std::get<ImageDisc>(disc.shape);
  const MarkovIfs& b = root();
  Point2 q = p;
  for (auto it = im.word.letters.rbegin(); it != im.word.letters.rend(); ++it) {
    const Branch& br = b.branches.at(*it);
    try {
      q = apply_inverse(br.map, q);
    } catch (const DomainError&) {
      return false;
    }
  }
  return b.discs.at(im.baseDisc).round().contains(q, slack);
}

int MarkovIfs::disc_of(const Point2& p) const {
  for (std::size_t d = 0; d < discs.size(); ++d)
    if (disc_contains(static_cast<int>(d), p)) return static_cast<int>(d);
  return -1;
}

Point2 MarkovIfs::disc_center(int d) const {
  const Disc& disc = discs.at(d);
  if (disc.is_round()) return disc.round().center;
  const ImageDisc& im = std::get<ImageDisc>(disc.shape);
  const MarkovIfs& b = root();
  Point2 q = b.discs.at(im.baseDisc).round().center;
  for (int letter : im.word.letters) q = apply(b.branches.at(letter).map, q);
  return q;
}

double MarkovIfs::disc_radius_hint(int d) const {
  const Disc& disc = discs.at(d);
  if (disc.is_round()) return disc.round().radius;
  // Image discs: push two boundary points and take the max spread.
  const auto bd = disc_boundary(d, 16);
  const Point2 c = disc_center(d);
  double r = 0.0;
  for (const auto& p : bd) r = std::max(r, (p - c).norm());
  return r;
}

std::vector<Point2> MarkovIfs::disc_boundary(int d, int samples) const {
  const Disc& disc = discs.at(d);
  std::vector<Point2> out;
  out.reserve(samples);
  if (disc.is_round()) {
    const Round& r = disc.round();
    for (int i = 0; i < samples; ++i) {
      const double a = 2.0 * M_PI * i / samples;
      out.push_back(r.center + r.radius * Vec2(std::cos(a), std::sin(a)));
    }
    return out;
  }
  const ImageDisc& im = std::get<ImageDisc>(disc.shape);
  const MarkovIfs& b = root();
  const Round& r0 = b.discs.at(im.baseDisc).round();
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * M_PI * i / samples;
    Point2 q = r0.center + r0.radius * Vec2(std::cos(a), std::sin(a));
    for (int letter : im.word.letters) q = apply(b.branches.at(letter).map, q);
    out.push_back(q);
  }
  return out;
}

namespace {

double polyline_distance(const std::vector<Point2>& a,
                         const std::vector<Point2>& b) {
  double best = 1e300;
  for (const auto& p : a)
    for (const auto& q : b) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace

ValidationReport validate(const MarkovIfs& ifs, int boundarySamples,
                          double separationGap) {
  ValidationReport rep;
  rep.minContainmentMargin = 1e300;
  rep.minPairSeparation = 1e300;
  if (ifs.branches.empty()) {
    rep.minContainmentMargin = 0.0;
    rep.minPairSeparation = 0.0;
    return rep;  // degenerate IFS is valid
  }
  std::vector<std::vector<Point2>> imageBoundaries;
  for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
    const Branch& br = ifs.branches[j];
    const auto bd = ifs.disc_boundary(br.dom, boundarySamples);
    std::vector<Point2> image;
    image.reserve(bd.size());
    double margin = 1e300;
    for (const auto& p : bd) {
      const Point2 q = apply(br.map, p);
      image.push_back(q);
      const Disc& target = ifs.discs.at(br.target);
      if (target.is_round()) {
        margin = std::min(margin, target.round().margin(q));
      } else {
        margin = std::min(margin,
                          ifs.disc_contains(br.target, q) ? 0.5 * separationGap
                                                          : -1.0);
      }
    }
    if (margin <= 0.0) {
      rep.valid = false;
      rep.issues.push_back(
          {"branch " + std::to_string(j) + " image not inside target interior"});
    }
    rep.minContainmentMargin = std::min(rep.minContainmentMargin, margin);
    imageBoundaries.push_back(std::move(image));
  }
  for (std::size_t a = 0; a < imageBoundaries.size(); ++a) {
    for (std::size_t b = a + 1; b < imageBoundaries.size(); ++b) {
      const double d = polyline_distance(imageBoundaries[a], imageBoundaries[b]);
      // Disjointness can fail with one image nested inside another; detect by
      // membership of a representative point.
      bool nested = false;
      const Point2 repA = apply(ifs.branches[a].map, ifs.disc_center(ifs.branches[a].dom));
      const Point2 repB = apply(ifs.branches[b].map, ifs.disc_center(ifs.branches[b].dom));
      auto inside = [&](const std::vector<Point2>& poly, const Point2& p) {
        // Ray casting on the sampled boundary polygon.
        bool in = false;
        for (std::size_t i = 0, k = poly.size() - 1; i < poly.size(); k = i++) {
          if (((poly[i].y() > p.y()) != (poly[k].y() > p.y())) &&
              (p.x() < (poly[k].x() - poly[i].x()) * (p.y() - poly[i].y()) /
                               (poly[k].y() - poly[i].y()) +
                           poly[i].x()))
            in = !in;
        }
        return in;
      };
      if (inside(imageBoundaries[a], repB) || inside(imageBoundaries[b], repA))
        nested = true;
      if (nested || d < separationGap) {
        rep.valid = false;
        rep.issues.push_back({"images of branches " + std::to_string(a) + " and " +
                              std::to_string(b) + " are not separated"});
      }
      rep.minPairSeparation = std::min(rep.minPairSeparation, d);
    }
  }
  if (rep.minContainmentMargin == 1e300) rep.minContainmentMargin = 0.0;
  if (rep.minPairSeparation == 1e300) rep.minPairSeparation = 0.0;
  return rep;
}

bool is_admissible(const MarkovIfs& ifs, const Word& w) {
  if (w.empty()) return true;
  for (int l : w.letters)
    if (l < 0 || l >= static_cast<int>(ifs.branches.size()))
      throw IndexError("branch index out of range");
  for (std::size_t m = 0; m + 1 < w.letters.size(); ++m)
    if (ifs.branches[w.letters[m]].target != ifs.branches[w.letters[m + 1]].dom)
      return false;
  return true;
}

Point2 evaluate_word(const MarkovIfs& ifs, const Word& w, const Point2& p) {
  Point2 q = p;
  for (int l : w.letters) q = apply(ifs.branches.at(l).map, q);
  return q;
}

Jacobian2 word_jacobian(const MarkovIfs& ifs, const Word& w, const Point2& p) {
  Point2 q = p;
  Mat2 J = Mat2::Identity();
  for (int l : w.letters) {
    J = jacobian(ifs.branches.at(l).map, q) * J;
    q = apply(ifs.branches.at(l).map, q);
  }
  return J;
}

MapChain word_chain(const MarkovIfs& ifs, const Word& w) {
  MapChain c;
  for (int l : w.letters)
    c = c.then(ifs.branches.at(l).map);
  return c;
}

std::pair<int, Point2> inverse_step(const MarkovIfs& ifs, const Point2& p) {
  int best = -1;
  Point2 bestQ;
  double bestResidual = 1e300;
  for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
    const Branch& br = ifs.branches[j];
    Point2 q;
    try {
      q = apply_inverse(br.map, p);
    } catch (const DomainError&) {
      continue;
    }
    if (!ifs.disc_contains(br.dom, q, 1e-12)) continue;
    const double res = (apply(br.map, q) - p).norm();
    if (res < bestResidual) {
      bestResidual = res;
      best = static_cast<int>(j);
      bestQ = q;
    }
  }
  if (best < 0 || bestResidual > 1e-6)
    throw NotInImage("point is not in the image of any branch");
  return {best, bestQ};
}

MarkovIfs refine(const MarkovIfs& ifs, int n) {
  if (n <= 0) return ifs;
  auto basePtr = std::make_shared<MarkovIfs>(ifs);
  // Enumerate admissible words of length n.
  std::vector<Word> words;
  std::vector<Word> frontier;
  for (std::size_t j = 0; j < ifs.branches.size(); ++j)
    frontier.push_back(Word{{static_cast<int>(j)}});
  for (int len = 1; len < n; ++len) {
    std::vector<Word> next;
    for (const auto& w : frontier) {
      for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
        if (ifs.branches[w.letters.back()].target ==
            ifs.branches[j].dom) {
          Word e = w;
          e.letters.push_back(static_cast<int>(j));
          next.push_back(std::move(e));
        }
      }
    }
    frontier = std::move(next);
  }
  words = frontier;

  MarkovIfs out;
  out.base = basePtr;
  std::map<std::vector<int>, int> discIndex;
  for (const auto& w : words) {
    Disc d;
    d.shape = ImageDisc{ifs.branches[w.letters.front()].dom, w};
    discIndex[w.letters] = static_cast<int>(out.discs.size());
    out.discs.push_back(std::move(d));
  }
  for (const auto& w : words) {
    const int from = discIndex.at(w.letters);
    const int lastTarget = ifs.branches[w.letters.back()].target;
    for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
      if (ifs.branches[j].dom != lastTarget) continue;
      std::vector<int> suff(w.letters.begin() + 1, w.letters.end());
      suff.push_back(static_cast<int>(j));
      auto it = discIndex.find(suff);
      if (it == discIndex.end()) continue;  // unreachable for valid IFS
      Branch nb;
      nb.dom = from;
      nb.target = it->second;
      nb.map = ifs.branches[j].map;
      out.branches.push_back(std::move(nb));
    }
  }
  return out;
}

std::optional<PeriodicOrbit> find_periodic(const MarkovIfs& ifs, const Word& w) {
  if (w.empty() || !is_admissible(ifs, w)) return std::nullopt;
  if (ifs.branches[w.letters.back()].target != ifs.branches[w.letters.front()].dom)
    return std::nullopt;
  const int domDisc = ifs.branches[w.letters.front()].dom;
  Point2 p = ifs.disc_center(domDisc);
  const double scale = std::max(1e-12, ifs.disc_radius_hint(domDisc));

  bool exited = false;
  for (int it = 0; it < 300; ++it) {
    Point2 q = evaluate_word(ifs, w, p);
    if (!ifs.disc_contains(domDisc, q, scale * 1e-9)) {
      exited = true;
      break;
    }
    const double step = (q - p).norm();
    p = q;
    if (step < tol::kFixedPoint) break;
  }
  // Newton polish (also the fallback when plain iteration stalls).
  for (int it = 0; it < 60; ++it) {
    const Point2 fq = evaluate_word(ifs, w, p);
    const Vec2 r = fq - p;
    if (r.norm() < tol::kNewton) break;
    const Mat2 J = word_jacobian(ifs, w, p) - Mat2::Identity();
    if (std::abs(J.determinant()) < 1e-300) break;
    p = p - J.inverse() * r;
  }
  const double residual = (evaluate_word(ifs, w, p) - p).norm();
  if (residual > 1e-10 * std::max(1.0, scale)) return std::nullopt;
  if (exited && !ifs.disc_contains(domDisc, p, scale * 1e-9)) return std::nullopt;

  PeriodicOrbit orbit;
  orbit.point = p;
  orbit.word = w;
  orbit.period = static_cast<int>(w.size());
  const Mat2 J = word_jacobian(ifs, w, p);
  orbit.eigen = eigenvalues2(J);
  orbit.points.push_back(p);
  orbit.discs.push_back(domDisc);
  Point2 q = p;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    q = apply(ifs.branches[w.letters[i]].map, q);
    orbit.points.push_back(q);
    orbit.discs.push_back(ifs.branches[w.letters[i]].target);
  }
  // Sampled Lipschitz estimate of the return map on the domain disc.
  double lip = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const Vec2 off(-0.8 + 0.4 * i, -0.8 + 0.4 * j);
      const Point2 s = ifs.disc_center(domDisc) + scale * off;
      if (!ifs.disc_contains(domDisc, s)) continue;
      lip = std::max(lip, op_norm(word_jacobian(ifs, w, s)));
    }
  }
  orbit.nonContraction = lip >= 1.0;
  return orbit;
}

std::vector<PeriodicOrbit> enumerate_periodic(const MarkovIfs& ifs, int maxLen) {
  std::vector<PeriodicOrbit> out;
  std::vector<Word> frontier;
  for (std::size_t j = 0; j < ifs.branches.size(); ++j)
    frontier.push_back(Word{{static_cast<int>(j)}});
  std::vector<std::pair<std::vector<int>, Point2>> found;
  for (int len = 1; len <= maxLen; ++len) {
    for (const auto& w : frontier) {
      if (w.primitive() &&
          ifs.branches[w.letters.back()].target ==
              ifs.branches[w.letters.front()].dom) {
        auto orb = find_periodic(ifs, w);
        if (orb) {
          // Deduplicate cyclic rotations by the orbit point set.
          bool dup = false;
          for (const auto& f : found)
            if ((f.second - orb->point).norm() < 1e-9) dup = true;
          for (const auto& o : out)
            for (const auto& pp : o.points)
              if ((pp - orb->point).norm() < 1e-9) dup = true;
          if (!dup) {
            found.push_back({w.letters, orb->point});
            out.push_back(*orb);
          }
        }
      }
    }
    if (len == maxLen) break;
    std::vector<Word> next;
    for (const auto& w : frontier) {
      for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
        if (ifs.branches[w.letters.back()].target == ifs.branches[j].dom) {
          Word e = w;
          e.letters.push_back(static_cast<int>(j));
          next.push_back(std::move(e));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

bool is_separated(const MarkovIfs& ifs, const PeriodicOrbit& orbit) {
  std::set<int> ds(orbit.discs.begin(), orbit.discs.end());
  (void)ifs;
  return ds.size() == orbit.discs.size();
}

Certificate large_stable_certificate(const MarkovIfs& ifs,
                                     const PeriodicOrbit& orbit, int grid,
                                     int iterations, double shrinkRadius) {
  Certificate cert;
  cert.grid = grid;
  cert.iterations = iterations;
  cert.shrinkRadius = shrinkRadius;
  const int d = orbit.discs.front();
  const Point2 c = ifs.disc_center(d);
  const double r = ifs.disc_radius_hint(d);
  double maxDist = 0.0;
  bool allLand = true;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double x = -1.0 + 2.0 * (i + 0.5) / grid;
      const double y = -1.0 + 2.0 * (j + 0.5) / grid;
      if (x * x + y * y > 0.995) continue;
      Point2 p = c + r * Vec2(x, y);
      if (!ifs.disc_contains(d, p)) continue;
      for (int it = 0; it < iterations; ++it) p = evaluate_word(ifs, orbit.word, p);
      const double dist = (p - orbit.point).norm();
      maxDist = std::max(maxDist, dist);
      if (dist > shrinkRadius) allLand = false;
    }
  }
  cert.maxFinalDistance = maxDist;
  double lip = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double x = -1.0 + 2.0 * (i + 0.5) / grid;
      const double y = -1.0 + 2.0 * (j + 0.5) / grid;
      if (x * x + y * y > 1.0) continue;
      const Point2 p = orbit.point + shrinkRadius * Vec2(x, y);
      if (!ifs.disc_contains(d, p)) continue;
      lip = std::max(lip, op_norm(word_jacobian(ifs, orbit.word, p)));
    }
  }
  cert.sampledLipschitz = lip;
  cert.pass = allLand && lip < 1.0;
  return cert;
}

CurveSample strong_stable_local(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                                double halfWidth, int samples) {
  const Mat2 J = word_jacobian(ifs, orbit.word, orbit.point);
  const Eigen2 ev = eigenvalues2(J);
  if (!ev.real) throw NoGap("complex eigenvalues");
  const double l1 = std::min(std::abs(ev.a), std::abs(ev.b));
  const double l2 = std::max(std::abs(ev.a), std::abs(ev.b));
  if (std::abs(l1 - l2) < 1e-8) throw NoGap("eigenvalue gap below 1e-8");
  const double lam1 = std::abs(ev.a) < std::abs(ev.b) ? ev.a : ev.b;
  const double lam2 = std::abs(ev.a) < std::abs(ev.b) ? ev.b : ev.a;
  const Vec2 e1 = eigenvector2(J, lam1);
  Vec2 e2 = eigenvector2(J, lam2);
  // Graph coordinates: xi along e1, eta along the complement direction.
  Vec2 n1(-e1.y(), e1.x());
  if (std::abs(n1.dot(e2)) < 0.1) n1 = e2;  // defensive frame choice

  const MapChain chain = word_chain(ifs, orbit.word);
  auto to_frame = [&](const Point2& p) {
    const Vec2 q = p - orbit.point;
    return Vec2(q.dot(e1), q.dot(n1));
  };
  auto from_frame = [&](const Vec2& q) {
    return Point2(orbit.point + q.x() * e1 + q.y() * n1);
  };

  std::vector<double> xs(samples);
  for (int i = 0; i < samples; ++i)
    xs[i] = -halfWidth + 2.0 * halfWidth * i / (samples - 1);
  std::vector<double> eta(samples, 0.0);

  const int maxIter = 400;
  for (int it = 0; it < maxIter; ++it) {
    // Pull the graph back through the formal inverse of the return chain and
    // resample over the window.
    std::vector<double> px, py;
    px.reserve(samples);
    py.reserve(samples);
    for (int i = 0; i < samples; ++i) {
      Point2 p = from_frame(Vec2(xs[i], eta[i]));
      Point2 q;
      try {
        q = apply_inverse(chain, p);
      } catch (const DomainError&) {
        continue;
      }
      const Vec2 f = to_frame(q);
      px.push_back(f.x());
      py.push_back(f.y());
    }
    if (px.size() < 4) break;
    // The backward map expands the e1 coordinate; interpolate back onto xs.
    std::vector<double> next(samples, 0.0);
    double delta = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double x = xs[i];
      // binary search in px (monotone for the maps used here)
      auto lo = std::lower_bound(px.begin(), px.end(), x);
      double v;
      if (lo == px.begin())
        v = py.front();
      else if (lo == px.end())
        v = py.back();
      else {
        const std::size_t k = static_cast<std::size_t>(lo - px.begin());
        const double w = (x - px[k - 1]) / (px[k] - px[k - 1]);
        v = py[k - 1] * (1 - w) + py[k] * w;
      }
      delta = std::max(delta, std::abs(v - eta[i]));
      next[i] = v;
    }
    eta = std::move(next);
    if (delta < tol::kGraphTransform) break;
  }

  CurveSample c;
  c.id = "Wss";
  c.t = xs;
  c.p.resize(samples);
  c.tangent.resize(samples);
  for (int i = 0; i < samples; ++i) c.p[i] = from_frame(Vec2(xs[i], eta[i]));
  if (c.p.front().x() > c.p.back().x()) {
    std::reverse(c.p.begin(), c.p.end());
    for (auto& tt : c.t) tt = -tt;
    std::reverse(c.t.begin(), c.t.end());
  }
  for (int i = 0; i < samples; ++i) {
    Vec2 d;
    if (i == 0)
      d = c.p[1] - c.p[0];
    else if (i == samples - 1)
      d = c.p[samples - 1] - c.p[samples - 2];
    else
      d = c.p[i + 1] - c.p[i - 1];
    const double n = d.norm();
    c.tangent[i] = n > 0 ? Vec2(d / n) : Vec2(1, 0);
  }
  return c;
}

HomoclinicReport verify_homoclinic(const MarkovIfs& ifs,
                                   const PeriodicOrbit& orbit,
                                   const HomoclinicPoint& H) {
  HomoclinicReport rep;
  const int dH = ifs.disc_of(H.point);
  // (a) On the local strong stable manifold of the orbit point in disc dH.
  int orbitIdx = -1;
  for (std::size_t i = 0; i < orbit.discs.size(); ++i)
    if (orbit.discs[i] == dH) orbitIdx = static_cast<int>(i);
  if (orbitIdx >= 0) {
    PeriodicOrbit rotated = orbit;
    rotated.point = orbit.points[orbitIdx];
    std::rotate(rotated.word.letters.begin(),
                rotated.word.letters.begin() + orbitIdx,
                rotated.word.letters.end());
    const double hw =
        std::max((H.point - rotated.point).norm() * 1.1,
                 ifs.disc_radius_hint(dH) * 0.9);
    const CurveSample wss = strong_stable_local(ifs, rotated, hw, 801);
    rep.strongStableDistance = wss.distance(H.point);
    rep.onStrongStable = rep.strongStableDistance < tol::kSsAxis;
  }
  // (b) Not in the image of the periodic branch entering disc dH.
  rep.offPeriodicImage = true;
  for (std::size_t i = 0; i < orbit.word.letters.size(); ++i) {
    const Branch& br = ifs.branches[orbit.word.letters[i]];
    if (br.target != dH) continue;
    try {
      const Point2 q = apply_inverse(br.map, H.point);
      if (ifs.disc_contains(br.dom, q) &&
          (apply(br.map, q) - H.point).norm() < 1e-9)
        rep.offPeriodicImage = false;
    } catch (const DomainError&) {
    }
  }
  // (c) Inverse orbit along omega(Q) reaches the periodic orbit.
  Point2 q = H.point;
  bool ok = true;
  std::vector<Point2> intermediates;
  for (auto it = H.word.letters.rbegin(); it != H.word.letters.rend(); ++it) {
    try {
      q = apply_inverse(ifs.branches.at(*it).map, q);
    } catch (const DomainError&) {
      ok = false;
      break;
    }
    intermediates.push_back(q);
  }
  if (ok) {
    double best = 1e300;
    for (const auto& p : orbit.points) best = std::min(best, (q - p).norm());
    rep.inverseOrbitResidual = best;
    rep.inverseOrbitReaches = best < tol::kSsAxis;
  }
  // (d) q-freeness: intermediate points avoid the periodic discs.
  rep.qFree = true;
  if (!intermediates.empty()) intermediates.pop_back();  // final = orbit point
  for (const auto& p : intermediates) {
    for (int d : orbit.discs)
      if (ifs.disc_contains(d, p)) rep.qFree = false;
  }
  return rep;
}

}  // namespace mifs
