#pragma once

#include "mifs/markov.hpp"

namespace mifs {

// Anchor data of the homoclinic transit in the first fundamental domain.
struct WellIndices {
  Point2 Q1;          // first inverse-orbit point on orb(q)
  int Q1orbitIdx{0};  // which orbit point
  int t{1};           // transit length (frak t)
  Point2 Q2;          // F_Q^t(Q1)
  int a{0};           // frak a: smallest a with F_q^a(Q2) in D_q
  int d{0};           // frak d: smallest d with F_q^d(D_q) in D_{Q1}
  std::vector<int> transitWord;  // the t letters carrying Q1 to Q2
};

WellIndices compute_indices(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                            const HomoclinicPoint& H);

enum class WellSet { Xi, Theta, T, S, LambdaBar, Delta };

struct WellSystem {
  MarkovIfs ifs;  // copy of the scenario IFS the wells were computed on
  PeriodicOrbit orbit;
  HomoclinicPoint H;
  WellIndices idx;
  int depth{8};
  int iXi{0};
  std::vector<Round> deltaDiscs;        // chosen Delta_i for i = 0..pi-1
  std::vector<bool> deltaEmpty;         // no non-well components in annulus i
  std::vector<std::vector<int>> deltaComponents;  // contributing branches

  // Word carrying the base disc onto the set (pushforward letters, applied
  // left to right), with the base disc index.
  struct PushSpec {
    std::vector<int> word;
    int baseDisc{0};
  };
  PushSpec xi_spec(int n) const;
  PushSpec t_spec(int n) const;
};

WellSystem compute_well_system(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                               const HomoclinicPoint& H, int depth);

bool membership(const WellSystem& ws, WellSet set, int n, const Point2& p);

// Sampled boundary polyline of a well set (for rendering and invariants).
std::vector<Point2> well_boundary(const WellSystem& ws, WellSet set, int n,
                                  int samples = 128);

}  // namespace mifs
