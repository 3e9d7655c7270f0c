#pragma once

#include "mifs/presolution.hpp"

namespace mifs {

// Region pieces are per-disc; membership is decidable and margins to the free
// boundary (the boundary within the open-disc topology) are closed-form for
// round/annular pieces and probe-estimated otherwise.
struct AnnulusPiece {
  int disc{0};
  Vec2 center{0, 0};
  double rIn{0.0};
  double rOut{1.0};
  bool outerIsDiscBoundary{false};  // then the outer circle is not free
};

struct RoundPiece {
  int disc{0};
  Round ball;
};

// Tube around a graph curve with an optional pinched half-width profile.
struct TubePiece {
  int disc{0};
  CurveSample curve;
  double halfWidth{0.05};
  std::vector<std::pair<double, double>> pinches;  // (x center, radius): hw/2
  double halfWidthAt(double x) const;
};

// Complement closure of the n-th image union (Lemma-style lift sets).
struct ComplementOfImages {
  int n{1};
};

// Membership via forward words: p in R_n iff some admissible n-word sends p
// into the payload region.
struct PulledBack {
  int n{1};
  std::shared_ptr<const struct Region> payload;
};

struct RegionPiece {
  std::variant<AnnulusPiece, RoundPiece, TubePiece, ComplementOfImages,
               PulledBack>
      piece;
};

struct Region {
  std::vector<RegionPiece> pieces;

  static Region annulus(int disc, const Vec2& c, double rIn, double rOut,
                        bool outerIsBoundary) {
    Region r;
    r.pieces.push_back({AnnulusPiece{disc, c, rIn, rOut, outerIsBoundary}});
    return r;
  }
  static Region ball(int disc, const Round& b) {
    Region r;
    r.pieces.push_back({RoundPiece{disc, b}});
    return r;
  }
};

bool region_contains(const MarkovIfs& ifs, const Region& r, const Point2& p);
// Margin to the free boundary (positive inside); probe-estimated for the
// implicit pieces.
double region_margin(const MarkovIfs& ifs, const Region& r, const Point2& p);

struct RepellingReport {
  bool pass{false};
  double minMargin{0.0};
  int samplesChecked{0};
};

RepellingReport check_relatively_repelling(const MarkovIfs& ifs, const Region& r,
                                           int samples);

Region repelling_iterate(const MarkovIfs& ifs, const Region& r, int n);

Region lift_from_refinement(const MarkovIfs& baseIfs, const Region& refined,
                            int n);

// Normal scaling xi_i composed onto every incoming branch; the curves are
// pointwise fixed and the normal derivative on the curve is 1 + kappa.
struct ScalingOptions {
  double supportWidth{0.06};
  int integrationSteps{128};
  double capLen{0.0};                                // 0: auto (5x width)
  std::vector<std::pair<double, double>> holes;      // identity zones (x, r)
};

MarkovIfs build_normal_scalings(const MarkovIfs& ifs,
                                const InvariantCurveFamily& gamma, double kappa,
                                const ScalingOptions& opt = {});

struct RepellerAttractor {
  MarkovIfs contracting;    // two-stage scaled IFS (uniform contraction on A)
  MarkovIfs identityAtQ;    // same with the identity holes near the orbit
  Region R;
  Region A;
  RepellingReport repelling;
  bool attractorDichotomy{false};
  int k1{0};
  double uniformContractionNorm{1.0};
  double totalC1{0.0};
};

RepellerAttractor build_repeller_attractor(const MarkovIfs& ifs,
                                           const InvariantCurveFamily& gamma,
                                           double eta);

}  // namespace mifs
