#include "mifs/wells.hpp"

#include <cmath>

namespace mifs {

namespace {

// Letter of omega(q) that maps the orbit point with disc `disc` forward.
int periodic_letter_from(const PeriodicOrbit& orbit, int disc) {
  for (std::size_t i = 0; i < orbit.discs.size(); ++i)
    if (orbit.discs[i] == disc)
      return orbit.word.letters[i % orbit.word.size()];
  throw DomainError("disc does not carry the periodic orbit");
}

// The word of j forward steps of F_q starting from disc `disc`.
std::vector<int> periodic_word_from(const MarkovIfs& ifs,
                                    const PeriodicOrbit& orbit, int disc,
                                    int steps) {
  std::vector<int> out;
  int cur = disc;
  for (int k = 0; k < steps; ++k) {
    const int l = periodic_letter_from(orbit, cur);
    out.push_back(l);
    cur = ifs.branches[l].target;
  }
  return out;
}

// The word of j backward steps of F_q ending at disc `disc` (letters in
// forward order), together with the starting disc.
std::pair<std::vector<int>, int> periodic_word_ending_at(
    const MarkovIfs& /*ifs*/, const PeriodicOrbit& orbit, int disc, int steps) {
  // Walk the cyclic orbit backwards.
  int pos = -1;
  for (std::size_t i = 0; i < orbit.discs.size(); ++i)
    if (orbit.discs[i] == disc) pos = static_cast<int>(i);
  if (pos < 0) throw DomainError("disc does not carry the periodic orbit");
  const int n = static_cast<int>(orbit.word.size());
  std::vector<int> out(steps);
  int cur = pos;
  for (int k = steps - 1; k >= 0; --k) {
    cur = (cur - 1 % n + n) % n;
    out[k] = orbit.word.letters[cur];
  }
  const int startDisc = orbit.discs[((pos - steps) % n + n) % n];
  return {out, startDisc};
}

bool pull_back_in_disc(const MarkovIfs& ifs, const std::vector<int>& word,
                       int baseDisc, const Point2& p, const Round* baseShape) {
  Point2 q = p;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    try {
      q = apply_inverse(ifs.branches[*it].map, q);
    } catch (const DomainError&) {
      return false;
    }
  }
  if (baseShape) return baseShape->contains(q);
  return ifs.disc_contains(baseDisc, q);
}

// Deterministic approximate minimal enclosing circle (Ritter).
Round enclosing_circle(const std::vector<Point2>& pts) {
  Round c;
  if (pts.empty()) return c;
  Point2 a = pts[0], b = pts[0];
  for (const auto& p : pts)
    if ((p - pts[0]).norm() > (a - pts[0]).norm()) a = p;
  for (const auto& p : pts)
    if ((p - a).norm() > (b - a).norm()) b = p;
  c.center = 0.5 * (a + b);
  c.radius = 0.5 * (a - b).norm();
  for (const auto& p : pts) {
    const double d = (p - c.center).norm();
    if (d > c.radius) {
      const double nr = 0.5 * (c.radius + d);
      c.center += (p - c.center) * ((d - c.radius) / (2.0 * d));
      c.radius = nr;
    }
  }
  c.radius *= 1.0 + 1e-12;
  return c;
}

}  // namespace

WellIndices compute_indices(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                            const HomoclinicPoint& H) {
  WellIndices idx;
  // Inverse orbit of Q along omega(Q): the last point is Q1 on orb(q).
  Point2 q = H.point;
  std::vector<Point2> chain{q};
  for (auto it = H.word.letters.rbegin(); it != H.word.letters.rend(); ++it) {
    q = apply_inverse(ifs.branches[*it].map, q);
    chain.push_back(q);
  }
  int best = -1;
  double bd = 1e300;
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    const double d = (q - orbit.points[i]).norm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  if (bd > 1e-7) throw DomainError("homoclinic inverse orbit misses the orbit");
  idx.Q1 = orbit.points[best];
  idx.Q1orbitIdx = best;

  // Smallest t > 0 with F_Q^t(Q1) in a periodic disc.
  Point2 p = idx.Q1;
  idx.t = 0;
  for (std::size_t k = 0; k < H.word.size(); ++k) {
    p = apply(ifs.branches[H.word.letters[k]].map, p);
    idx.transitWord.push_back(H.word.letters[k]);
    const int d = ifs.disc_of(p);
    bool periodicDisc = false;
    for (int od : orbit.discs)
      if (od == d) periodicDisc = true;
    if (periodicDisc) {
      idx.t = static_cast<int>(k) + 1;
      break;
    }
  }
  if (idx.t == 0) throw DomainError("transit never returns to the periodic discs");
  idx.transitWord.resize(idx.t);
  idx.Q2 = p;

  // Smallest a >= 0 with F_q^a(Q2) in D_q.
  const int qDisc = orbit.discs.front();
  idx.a = 0;
  Point2 r = idx.Q2;
  int cur = ifs.disc_of(r);
  for (int k = 0; k <= static_cast<int>(orbit.word.size()); ++k) {
    if (cur == qDisc) {
      idx.a = k;
      break;
    }
    const int l = periodic_letter_from(orbit, cur);
    r = apply(ifs.branches[l].map, r);
    cur = ifs.branches[l].target;
  }

  // Smallest d >= 0 with F_q^d(D_q) inside D_{Q1}.
  const int q1Disc = orbit.discs[idx.Q1orbitIdx];
  for (int dstep = 0; dstep <= 64; ++dstep) {
    const auto pw = periodic_word_from(ifs, orbit, qDisc, dstep);
    bool inside = true;
    const auto bd2 = ifs.disc_boundary(qDisc, 32);
    for (Point2 s : bd2) {
      for (int l : pw) s = apply(ifs.branches[l].map, s);
      if (!ifs.disc_contains(q1Disc, s)) inside = false;
    }
    if (inside) {
      idx.d = dstep;
      break;
    }
  }
  return idx;
}

WellSystem::PushSpec WellSystem::xi_spec(int n) const {
  PushSpec spec;
  // Xi_n = F_q^a o F_Q^n (D_{F^{-n}(Q2)}): the last n transit letters, then
  // a periodic steps from D_{Q2}.
  const auto& tw = idx.transitWord;
  spec.word.assign(tw.end() - n, tw.end());
  const int q2Disc = ifs.disc_of(idx.Q2);
  auto aw = periodic_word_from(ifs, orbit, q2Disc, idx.a);
  spec.word.insert(spec.word.end(), aw.begin(), aw.end());
  // Base disc: the domain of the first of the last-n transit letters.
  spec.baseDisc = ifs.branches[tw[tw.size() - n]].dom;
  return spec;
}

WellSystem::PushSpec WellSystem::t_spec(int n) const {
  PushSpec spec;
  // T_n = F_q^a o F_Q^t o F_q^n (D_{F_q^{-n}(Q1)}).
  const int q1Disc = orbit.discs[idx.Q1orbitIdx];
  auto [nw, startDisc] = periodic_word_ending_at(ifs, orbit, q1Disc, n);
  spec.word = nw;
  spec.word.insert(spec.word.end(), idx.transitWord.begin(),
                   idx.transitWord.end());
  const int q2Disc = ifs.disc_of(idx.Q2);
  auto aw = periodic_word_from(ifs, orbit, q2Disc, idx.a);
  spec.word.insert(spec.word.end(), aw.begin(), aw.end());
  spec.baseDisc = startDisc;
  return spec;
}

WellSystem compute_well_system(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                               const HomoclinicPoint& H, int depth) {
  WellSystem ws;
  ws.ifs = ifs;
  ws.orbit = orbit;
  ws.H = H;
  ws.idx = compute_indices(ifs, orbit, H);
  ws.depth = depth;

  // i_Xi: the annulus index hosting Xi_1.
  const auto xi1 = ws.xi_spec(1);
  const int qDisc = orbit.discs.front();
  std::vector<Point2> xiBoundary;
  {
    const auto bd = ifs.disc_boundary(xi1.baseDisc, 64);
    for (Point2 p : bd) {
      for (int l : xi1.word) p = apply(ifs.branches[l].map, p);
      xiBoundary.push_back(p);
    }
  }
  ws.iXi = 0;
  for (int i = 0; i < 64; ++i) {
    const auto pw = periodic_word_from(ifs, orbit, qDisc, i);
    bool inside = true;
    for (const auto& p : xiBoundary)
      if (!pull_back_in_disc(ifs, pw, qDisc, p, nullptr)) inside = false;
    if (inside)
      ws.iXi = i;
    else
      break;
  }

  // Obstruction discs per fundamental annulus.
  const int pi = orbit.period;
  ws.deltaDiscs.resize(pi);
  ws.deltaEmpty.assign(pi, true);
  ws.deltaComponents.resize(pi);
  const int q2Disc = ifs.disc_of(ws.idx.Q2);
  const int finalTransit = ws.idx.transitWord.back();
  for (int i = 0; i < pi; ++i) {
    // Disc of F^{-i}(q) and the periodic branch mapping into it.
    const int n = static_cast<int>(orbit.word.size());
    const int discIdx = orbit.discs[((0 - i) % n + n) % n];
    const int periodicIn = orbit.word.letters[(((0 - i - 1) % n) + n) % n];
    std::vector<Point2> pts;
    for (std::size_t b = 0; b < ifs.branches.size(); ++b) {
      if (ifs.branches[b].target != discIdx) continue;
      if (static_cast<int>(b) == periodicIn) continue;
      // Skip the transit-chain image (handled by the well system).
      if (discIdx == q2Disc && static_cast<int>(b) == finalTransit) continue;
      ws.deltaEmpty[i] = false;
      ws.deltaComponents[i].push_back(static_cast<int>(b));
      const auto bd = ifs.disc_boundary(ifs.branches[b].dom, 64);
      const auto pw = periodic_word_from(ifs, orbit, discIdx, i);
      for (Point2 p : bd) {
        p = apply(ifs.branches[b].map, p);
        for (int l : pw) p = apply(ifs.branches[l].map, p);
        pts.push_back(p);
      }
    }
    if (!ws.deltaEmpty[i]) {
      ws.deltaDiscs[i] = enclosing_circle(pts);
      if (i == ws.iXi) {
        // Must be disjoint from Xi_1 when they share the annulus.
        double minD = 1e300;
        for (const auto& p : xiBoundary)
          minD = std::min(minD, (p - ws.deltaDiscs[i].center).norm());
        if (minD <= ws.deltaDiscs[i].radius)
          throw ObstructionConflict(
              "no enclosing obstruction disc avoids Xi_1 in annulus " +
              std::to_string(i));
      }
    }
  }
  return ws;
}

bool membership(const WellSystem& ws, WellSet set, int n, const Point2& p) {
  const MarkovIfs& ifs = ws.ifs;
  const int qDisc = ws.orbit.discs.front();
  switch (set) {
    case WellSet::Xi: {
      if (n < 1 || n > ws.idx.t) throw IndexError("Xi index out of range");
      const auto spec = ws.xi_spec(n);
      return pull_back_in_disc(ifs, spec.word, spec.baseDisc, p, nullptr);
    }
    case WellSet::Theta: {
      if (n < 1 || n >= ws.idx.t) throw IndexError("Theta index out of range");
      if (membership(ws, WellSet::Xi, n + 1, p)) return false;
      const auto spec = ws.xi_spec(n);
      for (std::size_t b = 0; b < ifs.branches.size(); ++b) {
        if (ifs.branches[b].target != spec.baseDisc) continue;
        std::vector<int> w{static_cast<int>(b)};
        w.insert(w.end(), spec.word.begin(), spec.word.end());
        if (pull_back_in_disc(ifs, w, ifs.branches[b].dom, p, nullptr))
          return true;
      }
      return false;
    }
    case WellSet::T: {
      const auto spec = ws.t_spec(n);
      return pull_back_in_disc(ifs, spec.word, spec.baseDisc, p, nullptr);
    }
    case WellSet::S: {
      if (membership(ws, WellSet::T, n + 1, p)) return false;
      const auto spec = ws.t_spec(n);
      for (std::size_t b = 0; b < ifs.branches.size(); ++b) {
        if (ifs.branches[b].target != spec.baseDisc) continue;
        std::vector<int> w{static_cast<int>(b)};
        w.insert(w.end(), spec.word.begin(), spec.word.end());
        if (pull_back_in_disc(ifs, w, ifs.branches[b].dom, p, nullptr))
          return true;
      }
      return false;
    }
    case WellSet::LambdaBar: {
      const int nn = static_cast<int>(ws.orbit.word.size());
      const int startDisc = ws.orbit.discs[((0 - n) % nn + nn) % nn];
      const auto pw = periodic_word_from(ifs, ws.orbit, startDisc, n);
      return pull_back_in_disc(ifs, pw, startDisc, p, nullptr);
    }
    case WellSet::Delta: {
      const int pi = ws.orbit.period;
      const int i = n % pi;
      const int k = n - i;
      if (ws.deltaEmpty[i]) return false;
      const auto pw = periodic_word_from(ifs, ws.orbit, qDisc, k);
      return pull_back_in_disc(ifs, pw, qDisc, p, &ws.deltaDiscs[i]);
    }
  }
  return false;
}

std::vector<Point2> well_boundary(const WellSystem& ws, WellSet set, int n,
                                  int samples) {
  const MarkovIfs& ifs = ws.ifs;
  std::vector<Point2> out;
  auto push_circle = [&](const std::vector<int>& word, int baseDisc,
                         const Round* shape) {
    std::vector<Point2> bd;
    if (shape) {
      for (int i = 0; i < samples; ++i) {
        const double a = 2.0 * M_PI * i / samples;
        bd.push_back(shape->center + shape->radius * Vec2(std::cos(a), std::sin(a)));
      }
    } else {
      bd = ifs.disc_boundary(baseDisc, samples);
    }
    for (Point2 p : bd) {
      for (int l : word) p = apply(ifs.branches[l].map, p);
      out.push_back(p);
    }
  };
  switch (set) {
    case WellSet::Xi: {
      const auto spec = ws.xi_spec(n);
      push_circle(spec.word, spec.baseDisc, nullptr);
      break;
    }
    case WellSet::T: {
      const auto spec = ws.t_spec(n);
      push_circle(spec.word, spec.baseDisc, nullptr);
      break;
    }
    case WellSet::LambdaBar: {
      const int nn = static_cast<int>(ws.orbit.word.size());
      const int startDisc = ws.orbit.discs[((0 - n) % nn + nn) % nn];
      const auto pw = periodic_word_from(ifs, ws.orbit, startDisc, n);
      push_circle(pw, startDisc, nullptr);
      break;
    }
    case WellSet::Delta: {
      const int pi = ws.orbit.period;
      const int i = n % pi;
      if (ws.deltaEmpty[i]) break;
      const auto pw =
          periodic_word_from(ifs, ws.orbit, ws.orbit.discs.front(), n - i);
      push_circle(pw, ws.orbit.discs.front(), &ws.deltaDiscs[i]);
      break;
    }
    case WellSet::Theta:
    case WellSet::S: {
      // Component-wise boundaries.
      const auto spec = set == WellSet::Theta ? ws.xi_spec(n) : ws.t_spec(n);
      for (std::size_t b = 0; b < ifs.branches.size(); ++b) {
        if (ifs.branches[b].target != spec.baseDisc) continue;
        std::vector<int> w{static_cast<int>(b)};
        w.insert(w.end(), spec.word.begin(), spec.word.end());
        push_circle(w, ifs.branches[b].dom, nullptr);
      }
      break;
    }
  }
  return out;
}

}  // namespace mifs
