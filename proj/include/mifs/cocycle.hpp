#pragma once

#include "mifs/markov.hpp"

namespace mifs {

struct Cocycle {
  std::vector<Mat2> matrices;

  Mat2 product() const {
    Mat2 p = Mat2::Identity();
    for (const auto& m : matrices) p = m * p;
    return p;
  }
};

struct FlexiblePath {
  std::vector<std::pair<double, Cocycle>> samples;  // t in [-1,1], includes -1,0,1
  double epsilon{0.0};

  const Cocycle& at(double t) const;        // nearest sample
  Cocycle interpolate(double t) const;      // linear in the entries
  std::size_t length() const {
    return samples.empty() ? 0 : samples.front().second.matrices.size();
  }
};

struct FlexibilityReport {
  bool perIndexDiameter{false};
  double diameter{0.0};  // max over indices of max ||A_{i,s} - A_{i,t}||
  bool matchesBase{false};
  bool distinctContracting{false};  // product eigen distinct, positive, in (0,1)
  bool homothetyAtMinusOne{false};
  double homothetyFactor{0.0};
  bool smallestEigenBelowOne{false};
  bool unitEigenAtOne{false};
  double unitEigenResidual{0.0};
  bool pass(double eps) const {
    return diameter < eps && matchesBase && distinctContracting &&
           homothetyAtMinusOne && smallestEigenBelowOne && unitEigenAtOne;
  }
};

// Validates the six conditions of an epsilon-flexible path against the base
// cocycle (the path at t = 0).
FlexibilityReport validate_flexible(const FlexiblePath& path);

// Diagonal path from a contracting homothety (t=-1) through distinct
// eigenvalues (t=0) to unit second eigenvalue (t=1). Per-matrix variation is
// 1 - lambda1^(1/n); throws InfeasibleEpsilon when that reaches epsilon.
FlexiblePath canonical_flexible_path(int n, double lambda1, double epsilon,
                                     int tSamples = 201);

struct DeformationOptions {
  double supportRadius{0.25};
  double stepFraction{0.25};  // path step per return, as a fraction of epsilon
  int rampSteps{128};
};

// Realize the derivative-cocycle deformation from the path value at tStart to
// the value at tEnd as a perturbation along the orbit, supported in
// B(p_i, supportRadius). Matrix ramps replace the differential exactly inside
// supportRadius/2.
MarkovIfs realize_deformation(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                              const FlexiblePath& path, double tStart,
                              double tEnd, const DeformationOptions& opt = {});

}  // namespace mifs
