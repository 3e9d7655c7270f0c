#include "mifs/regions.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mifs {

double TubePiece::halfWidthAt(double x) const {
  double hw = halfWidth;
  for (const auto& [cx, r] : pinches) {
    const double d = std::abs(x - cx);
    if (d < r) hw = std::min(hw, halfWidth * (0.5 + 0.5 * smoothstep(d / r)));
  }
  return hw;
}

namespace {

bool piece_contains(const MarkovIfs& ifs, const RegionPiece& rp,
                    const Point2& p) {
  // closed regions: tiny slack absorbs boundary-exact sampling roundoff
  const double kSlack = 1e-9;
  if (const auto* a = std::get_if<AnnulusPiece>(&rp.piece)) {
    if (!ifs.disc_contains(a->disc, p, kSlack)) return false;
    const double r = (p - a->center).norm();
    return r >= a->rIn - kSlack && r <= a->rOut + kSlack;
  }
  if (const auto* b = std::get_if<RoundPiece>(&rp.piece)) {
    return ifs.disc_contains(b->disc, p, kSlack) && b->ball.contains(p, kSlack);
  }
  if (const auto* t = std::get_if<TubePiece>(&rp.piece)) {
    if (!ifs.disc_contains(t->disc, p, kSlack)) return false;
    // stadium semantics: the tube continues along the end tangents for up to
    // two half-widths (ends reaching the disc boundary leave no gap there)
    const double hw0 = t->halfWidth;
    if (p.x() < t->curve.front().x() - 2.0 * hw0 - kSlack ||
        p.x() > t->curve.back().x() + 2.0 * hw0 + kSlack)
      return false;
    double u, off;
    t->curve.project(p, &u, &off);
    return std::abs(off) <= t->halfWidthAt(p.x()) + kSlack;
  }
  if (const auto* c = std::get_if<ComplementOfImages>(&rp.piece)) {
    // closure(D \ F^n(D)): outside the open n-image union.
    Point2 q = p;
    for (int k = 0; k < c->n; ++k) {
      try {
        auto [b, pre] = inverse_step(ifs, q);
        q = pre;
      } catch (const NotInImage&) {
        return true;
      }
    }
    return false;
  }
  const auto& pb = std::get<PulledBack>(rp.piece);
  // p in F^{-n}(payload cap F^n(D)): some admissible forward n-word lands in
  // the payload.
  std::vector<Point2> pts{p};
  for (int k = 0; k < pb.n; ++k) {
    std::vector<Point2> next;
    for (const auto& x : pts) {
      const int d = ifs.disc_of(x);
      if (d < 0) continue;
      for (const auto& br : ifs.branches)
        if (br.dom == d) next.push_back(apply(br.map, x));
    }
    pts = std::move(next);
  }
  for (const auto& x : pts)
    if (region_contains(ifs, *pb.payload, x)) return true;
  return false;
}

double piece_margin(const MarkovIfs& ifs, const Region& whole,
                    const RegionPiece& rp, const Point2& p) {
  if (const auto* a = std::get_if<AnnulusPiece>(&rp.piece)) {
    const double r = (p - a->center).norm();
    double m = r - a->rIn;
    if (a->rIn <= 0.0) m = 1e300;
    if (!a->outerIsDiscBoundary) m = std::min(m, a->rOut - r);
    return m;
  }
  if (const auto* b = std::get_if<RoundPiece>(&rp.piece)) {
    return b->ball.margin(p);
  }
  if (const auto* t = std::get_if<TubePiece>(&rp.piece)) {
    double u, off;
    t->curve.project(p, &u, &off);
    double m = t->halfWidthAt(p.x()) - std::abs(off);
    // tube ends reaching the disc boundary are not free boundaries in the
    // disc topology
    const Disc& dd = ifs.discs[t->disc];
    auto interiorEnd = [&](const Point2& e) {
      return !dd.is_round() || dd.round().margin(e) > 0.01 * dd.round().radius;
    };
    if (interiorEnd(t->curve.front()))
      m = std::min(m, p.x() - t->curve.front().x());
    if (interiorEnd(t->curve.back()))
      m = std::min(m, t->curve.back().x() - p.x());
    return m;
  }
  // Probe-estimated margin for the implicit pieces.
  double lo = 0.0, hi = 0.4;
  for (int it = 0; it < 18; ++it) {
    const double mid = 0.5 * (lo + hi);
    bool allIn = true;
    for (int k = 0; k < 16; ++k) {
      const double ang = 2.0 * M_PI * k / 16;
      const Point2 q = p + mid * Vec2(std::cos(ang), std::sin(ang));
      if (ifs.disc_of(q) < 0) continue;  // beyond the discs: no boundary there
      if (!region_contains(ifs, whole, q)) allIn = false;
    }
    (allIn ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

bool region_contains(const MarkovIfs& ifs, const Region& r, const Point2& p) {
  for (const auto& rp : r.pieces)
    if (piece_contains(ifs, rp, p)) return true;
  return false;
}

double region_margin(const MarkovIfs& ifs, const Region& r, const Point2& p) {
  double best = -1e300;
  for (const auto& rp : r.pieces)
    if (piece_contains(ifs, rp, p))
      best = std::max(best, piece_margin(ifs, r, rp, p));
  return best;
}

RepellingReport check_relatively_repelling(const MarkovIfs& ifs, const Region& r,
                                           int samples) {
  RepellingReport rep;
  rep.minMargin = 1e300;
  int checked = 0;
  // Sample R cap F(D): push domain-disc samples through every branch and keep
  // those landing in R (this covers the image union densely and includes its
  // boundary rings).
  const int ring = std::max(8, samples / 16);
  for (const auto& br : ifs.branches) {
    const Point2 c = ifs.disc_center(br.dom);
    const double rad = ifs.disc_radius_hint(br.dom);
    for (int i = 0; i <= ring; ++i) {
      const double rr = static_cast<double>(i) / ring;
      const int nAng = std::max(8, static_cast<int>(samples * std::max(rr, 0.05)));
      for (int k = 0; k < nAng; ++k) {
        const double a = 2.0 * M_PI * k / nAng;
        const Point2 p0 = c + rad * rr * Vec2(std::cos(a), std::sin(a));
        if (!ifs.disc_contains(br.dom, p0)) continue;
        const Point2 p = apply(br.map, p0);
        if (!region_contains(ifs, r, p)) continue;
        // F^{-1}(p) = p0 by construction of the sample.
        const double margin = region_margin(ifs, r, p0);
        ++checked;
        if (!region_contains(ifs, r, p0) || margin <= 0.0) {
          rep.minMargin = std::min(rep.minMargin, -1.0);
          continue;
        }
        rep.minMargin = std::min(rep.minMargin, margin);
      }
    }
  }
  rep.samplesChecked = checked;
  if (checked == 0) {
    rep.pass = true;  // vacuous
    rep.minMargin = 0.0;
    return rep;
  }
  rep.pass = rep.minMargin > 0.0;
  return rep;
}

Region repelling_iterate(const MarkovIfs& /*ifs*/, const Region& r, int n) {
  if (n <= 0) return r;
  Region out;
  PulledBack pb;
  pb.n = n;
  pb.payload = std::make_shared<Region>(r);
  out.pieces.push_back({pb});
  return out;
}

Region lift_from_refinement(const MarkovIfs& /*baseIfs*/, const Region& refined,
                            int n) {
  Region out = refined;
  out.pieces.push_back({ComplementOfImages{n}});
  return out;
}

MarkovIfs build_normal_scalings(const MarkovIfs& ifs,
                                const InvariantCurveFamily& gamma, double kappa,
                                const ScalingOptions& opt) {
  MarkovIfs out = ifs;
  if (kappa == 0.0) return out;
  // One scaling map per disc holding curve pieces; composed onto incoming
  // branches.
  std::map<int, std::vector<const CurvePiece*>> byDisc;
  for (const auto& cp : gamma.pieces) {
    const int d = ifs.disc_of(cp.curve.p[cp.curve.size() / 2]);
    if (d >= 0) byDisc[d].push_back(&cp);
  }
  std::map<int, MapChain> scalers;
  for (const auto& [d, pieces] : byDisc) {
    MapChain sc;
    for (const CurvePiece* cp : pieces) {
      NormalScalingField f;
      // the curve as a graph profile (ascending x)
      const bool rev = cp->curve.front().x() > cp->curve.back().x();
      const std::size_t nsz = cp->curve.size();
      for (std::size_t kk = 0; kk < nsz; ++kk) {
        const std::size_t k = rev ? nsz - 1 - kk : kk;
        f.g.x.push_back(cp->curve.p[k].x());
        f.g.y.push_back(cp->curve.p[k].y());
        const Vec2 t = cp->curve.tangent[k];
        f.g.dy.push_back(std::abs(t.x()) > 1e-12 ? t.y() / t.x() : 0.0);
      }
      f.x0 = f.g.x.front();
      f.x1 = f.g.x.back();
      f.kappa = kappa;
      f.w = opt.supportWidth;
      f.capLen = opt.capLen > 0 ? opt.capLen
                                : std::min(5.0 * opt.supportWidth,
                                           0.2 * (f.x1 - f.x0));
      f.holes = opt.holes;
      if (f.x1 - f.x0 < 4.0 * f.capLen) continue;  // too short to scale
      NormalScalingFlowPrim prim;
      prim.field = f;
      prim.integrationSteps = opt.integrationSteps;
      if (ifs.discs[d].is_round()) {
        // SupportCollision guard: the tube must stay inside the disc.
        const Round& rd = ifs.discs[d].round();
        for (std::size_t k = 0; k < cp->curve.size(); ++k)
          if (rd.margin(cp->curve.p[k]) < 0.5 * opt.supportWidth &&
              cp->curve.p[k].x() > f.x0 + f.capLen &&
              cp->curve.p[k].x() < f.x1 - f.capLen)
            throw SupportCollision("scaling tube exits the disc interior");
      }
      sc.primitives.push_back(prim);
    }
    scalers[d] = sc;
  }
  for (auto& br : out.branches) {
    auto it = scalers.find(br.target);
    if (it == scalers.end() || it->second.primitives.empty()) continue;
    br.map = br.map.then(it->second);
  }
  return out;
}

RepellerAttractor build_repeller_attractor(const MarkovIfs& ifs,
                                           const InvariantCurveFamily& gamma,
                                           double eta) {
  if (eta > 0.2)
    throw DomainError("eta above the documented bound 0.2 for the two-stage construction");
  RepellerAttractor out;
  // Tube radius from the curve sampling pitch.
  double pitch = 0.0;
  for (const auto& cp : gamma.pieces) {
    double worst = 0.0;
    for (std::size_t k = 1; k < cp.curve.size(); ++k)
      worst = std::max(worst, (cp.curve.p[k] - cp.curve.p[k - 1]).norm());
    pitch = std::max(pitch, worst);
  }
  const double rR = std::max(3.0 * pitch, 0.01);
  // Stage 1 widens the exact zone past the R tube; stage 2 must be supported
  // strictly inside R so its inverse cannot push points out of the tube.
  ScalingOptions xiOpt;
  xiOpt.supportWidth = 6.0 * rR;
  ScalingOptions thetaOpt;
  thetaOpt.supportWidth = 0.9 * rR;

  MarkovIfs f1 = build_normal_scalings(ifs, gamma, 2.0 * eta, xiOpt);
  out.contracting = build_normal_scalings(f1, gamma, -3.0 * eta, thetaOpt);
  // Identity-near-q variant: same two stages with a hole around the orbit
  // wide enough that the certificate ball sees only the original map.
  {
    double holeR = 4.0 * rR;
    for (const auto& cp : gamma.pieces) {
      if (!cp.hasOrbitPoint) continue;
      const int d = ifs.disc_of(cp.curve.p[cp.curve.size() / 2]);
      if (d >= 0 && ifs.discs[d].is_round())
        holeR = std::max(holeR, 0.22 * ifs.discs[d].round().radius);
    }
    ScalingOptions xiHole = xiOpt;
    xiHole.holes.push_back({0.0, holeR});
    ScalingOptions thetaHole = thetaOpt;
    thetaHole.holes.push_back({0.0, holeR});
    MarkovIfs g1 = build_normal_scalings(ifs, gamma, 2.0 * eta, xiHole);
    out.identityAtQ = build_normal_scalings(g1, gamma, -3.0 * eta, thetaHole);
  }

  // R: tubes around the curve pieces, certified on the two-stage IFS (the
  // identity-at-q variant keeps periodicity and the large stable manifold
  // but is backward-neutral at q, where no tube can repel).
  for (const auto& cp : gamma.pieces) {
    TubePiece tube;
    tube.disc = ifs.disc_of(cp.curve.p[cp.curve.size() / 2]);
    tube.curve = cp.curve;
    tube.halfWidth = rR;
    out.R.pieces.push_back({tube});
  }
  out.repelling = check_relatively_repelling(out.contracting, out.R, 64);

  // A: slightly narrower tubes (topological discs around each piece).
  for (const auto& cp : gamma.pieces) {
    TubePiece tube;
    tube.disc = ifs.disc_of(cp.curve.p[cp.curve.size() / 2]);
    tube.curve = cp.curve;
    tube.halfWidth = 0.12 * rR;
    out.A.pieces.push_back({tube});
  }
  // Dichotomy: each branch image of an A piece is inside Int(A) or off R.
  out.attractorDichotomy = true;
  for (const auto& rp : out.A.pieces) {
    const auto& tube = std::get<TubePiece>(rp.piece);
    for (const auto& br : out.contracting.branches) {
      if (br.dom != tube.disc) continue;
      bool allInA = true, anyInR = false;
      for (std::size_t k = 0; k < tube.curve.size();
           k += std::max<std::size_t>(1, tube.curve.size() / 48)) {
        for (double off : {-0.9, 0.0, 0.9}) {
          const Vec2 t = tube.curve.tangent[k];
          const Vec2 nv(-t.y(), t.x());
          const Point2 p = tube.curve.p[k] + off * tube.halfWidth * nv;
          if (!ifs.disc_contains(br.dom, p)) continue;
          const Point2 q = apply(br.map, p);
          if (!region_contains(out.contracting, out.A, q)) allInA = false;
          if (region_contains(out.contracting, out.R, q)) anyInR = true;
        }
      }
      if (!(allInA || !anyInR)) out.attractorDichotomy = false;
    }
  }

  // Uniform contraction of the contracting variant restricted to A.
  {
    double best = 2.0;
    int k1 = 0;
    for (int kTry = 1; kTry <= 3 * 1; ++kTry) {
      double worst = 0.0;
      for (const auto& rp : out.A.pieces) {
        const auto& tube = std::get<TubePiece>(rp.piece);
        for (std::size_t k = 0; k < tube.curve.size();
             k += std::max<std::size_t>(1, tube.curve.size() / 32)) {
          // all admissible forward words of length kTry staying in A
          struct St {
            Point2 p;
            Mat2 J;
          };
          std::vector<St> states{{tube.curve.p[k], Mat2::Identity()}};
          for (int step = 0; step < kTry; ++step) {
            std::vector<St> next;
            for (const auto& st : states) {
              const int d = out.contracting.disc_of(st.p);
              if (d < 0) continue;
              for (const auto& br : out.contracting.branches) {
                if (br.dom != d) continue;
                const Point2 q = apply(br.map, st.p);
                if (!region_contains(out.contracting, out.A, q)) continue;
                next.push_back({q, jacobian(br.map, st.p) * st.J});
              }
            }
            states = std::move(next);
          }
          for (const auto& st : states)
            worst = std::max(worst, op_norm(st.J));
        }
      }
      if (worst < 1.0) {
        best = worst;
        k1 = kTry;
        break;
      }
      best = worst;
      k1 = kTry;
    }
    out.k1 = k1;
    out.uniformContractionNorm = best;
  }

  // Total perturbation budget (sampled near the tubes).
  {
    double worst = 0.0;
    for (const auto& rp : out.A.pieces) {
      const auto& tube = std::get<TubePiece>(rp.piece);
      for (const auto& brNew : out.identityAtQ.branches) {
        if (brNew.dom != tube.disc) continue;
        const Branch& brOld = ifs.branches[&brNew - &out.identityAtQ.branches[0]];
        for (std::size_t k = 0; k < tube.curve.size();
             k += std::max<std::size_t>(1, tube.curve.size() / 24)) {
          for (double off : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
            const Vec2 t = tube.curve.tangent[k];
            const Vec2 nv(-t.y(), t.x());
            const Point2 p = tube.curve.p[k] + off * rR * nv;
            if (!ifs.disc_contains(brNew.dom, p)) continue;
            worst = std::max(
                worst, op_norm(jacobian(brNew.map, p) - jacobian(brOld.map, p)));
          }
        }
      }
    }
    out.totalC1 = worst;
  }
  return out;
}

}  // namespace mifs
