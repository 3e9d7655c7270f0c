#pragma once

#include <memory>
#include <optional>
#include <string>

#include "mifs/curve.hpp"
#include "mifs/planar.hpp"

namespace mifs {

struct Word {
  std::vector<int> letters;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  bool operator==(const Word& o) const { return letters == o.letters; }

  // True when the word is not a power of a strictly shorter word.
  bool primitive() const;
};

struct ImageDisc {
  int baseDisc{0};  // domain disc of the word's first letter, in the base IFS
  Word word;
};

struct Disc {
  std::variant<Round, ImageDisc> shape;

  bool is_round() const { return std::holds_alternative<Round>(shape); }
  const Round& round() const { return std::get<Round>(shape); }
};

struct Branch {
  int dom{0};
  int target{0};
  MapChain map;
};

struct PeriodicOrbit {
  Point2 point;
  Word word;
  int period{1};
  Eigen2 eigen;
  std::vector<Point2> points;      // p_0 = point, p_i = F^i(p)
  std::vector<int> discs;          // disc index of each orbit point
  bool nonContraction{false};      // sampled Lipschitz >= 1 on the domain disc
};

struct HomoclinicPoint {
  Point2 point;
  Word word;        // omega(Q): F_word(p_l) = Q for an orbit point p_l
  int transitSteps{0};
};

struct MarkovIfs {
  std::vector<Disc> discs;
  std::vector<Branch> branches;
  std::shared_ptr<const MarkovIfs> base;  // set on refinements

  const MarkovIfs& root() const { return base ? base->root() : *this; }

  // Membership of p in disc d (ImageDisc membership by inverse-orbit test).
  bool disc_contains(int d, const Point2& p, double slack = 0.0) const;
  // Index of the disc containing p, or -1.
  int disc_of(const Point2& p) const;
  // Representative interior point (center for Round, pushed-forward center
  // for ImageDisc).
  Point2 disc_center(int d) const;
  double disc_radius_hint(int d) const;

  // Sampled boundary polyline of disc d.
  std::vector<Point2> disc_boundary(int d, int samples) const;
};

struct ValidationIssue {
  std::string what;
};

struct ValidationReport {
  bool valid{true};
  double minContainmentMargin{0.0};
  double minPairSeparation{0.0};
  std::vector<ValidationIssue> issues;
};

ValidationReport validate(const MarkovIfs& ifs, int boundarySamples = 256,
                          double separationGap = tol::kSeparationGap);

bool is_admissible(const MarkovIfs& ifs, const Word& w);

Point2 evaluate_word(const MarkovIfs& ifs, const Word& w, const Point2& p);
Jacobian2 word_jacobian(const MarkovIfs& ifs, const Word& w, const Point2& p);
MapChain word_chain(const MarkovIfs& ifs, const Word& w);

// The unique branch whose image contains p, with the preimage.
std::pair<int, Point2> inverse_step(const MarkovIfs& ifs, const Point2& p);

// n-refinement. n = 0 returns the IFS unchanged.
MarkovIfs refine(const MarkovIfs& ifs, int n);

std::optional<PeriodicOrbit> find_periodic(const MarkovIfs& ifs, const Word& w);

// All periodic orbits with primitive cyclic itineraries up to maxLen.
std::vector<PeriodicOrbit> enumerate_periodic(const MarkovIfs& ifs, int maxLen);

bool is_separated(const MarkovIfs& ifs, const PeriodicOrbit& orbit);

struct Certificate {
  bool pass{false};
  double maxFinalDistance{0.0};
  double sampledLipschitz{0.0};
  int grid{0};
  int iterations{0};
  double shrinkRadius{0.0};
};

Certificate large_stable_certificate(const MarkovIfs& ifs,
                                     const PeriodicOrbit& orbit, int grid,
                                     int iterations, double shrinkRadius);

// Local strong stable manifold as a sampled curve (graph transform /
// backward-iteration over the weak eigendirection window).
CurveSample strong_stable_local(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                                double halfWidth, int samples);

struct HomoclinicReport {
  bool onStrongStable{false};
  bool offPeriodicImage{false};
  bool inverseOrbitReaches{false};
  bool qFree{false};
  double strongStableDistance{0.0};
  double inverseOrbitResidual{0.0};
  bool pass() const {
    return onStrongStable && offPeriodicImage && inverseOrbitReaches && qFree;
  }
};

HomoclinicReport verify_homoclinic(const MarkovIfs& ifs,
                                   const PeriodicOrbit& orbit,
                                   const HomoclinicPoint& H);

}  // namespace mifs
