#pragma once

#include "mifs/retarded.hpp"
#include "mifs/wells.hpp"

namespace mifs {

// A graph curve y = f(x) on [-1,1], flat near the endpoints, with certified
// derivative bound alpha.
struct GraphCurve {
  Profile1 f;
  double alpha{0.5};
  double delta{0.1};

  static GraphCurve from_function(const std::function<double(double)>& f,
                                  const std::function<double(double)>& fd,
                                  double alpha, double delta, int n = 4097);
  double sampled_slope_bound(int samples = 10000) const;
};

struct SmallDiffeo {
  MapChain chain;      // a single flow primitive
  Round supportDisc;   // disc containing the support
  double c1Bound{0.0};
  double supportDiameter{0.0};
};

struct CostCertificate {
  double eta{0.0};
  long long K{0};
  double compositionError{0.0};
  // Materialized factors (graph-transport certificates have c identical
  // shear factors applied in order).
  std::vector<SmallDiffeo> factors;
  // Lazy factor family for the fragmentation construction: K = n^3 (n+5)
  // flows phi_{i,j,n}; factor(idx) materializes one.
  std::shared_ptr<Profile1> f;
  long long n{0};
  bool lazy() const { return n > 0; }
  SmallDiffeo factor(long long idx) const;
  long long factorCount() const { return lazy() ? K : static_cast<long long>(factors.size()); }
};

// Quantitative fragmentation of the isotopy carrying the axis to graph(f):
// chooses the smallest n whose factors obey the eta bounds and emits the
// n^3 layers factored over j in {-2,...,n+2}.
CostCertificate fragment_graph(const GraphCurve& g, double eta);

// Closed-form support diameter of factor (i,j) (exact for the emitted field).
double boufra_support_diameter(const GraphCurve& g, long long n, long long i,
                               int j);
// Maximum support diameter over all (i,j) at a given n.
double boufra_max_support_diameter(const GraphCurve& g, long long n);
// Calibrated C1 bound K' * (1+alpha) / n.
double boufra_c1_bound(double alpha, long long n);

// Zig-zag curve families in D_q of a prepared member (endpoints on
// Lambda_tau cap {x=y}; clauses against the beta rectangles).
struct ZetaReport {
  std::vector<CurveSample> curves;  // zeta_0..zeta_iMax
  CurveSample zetaMinusInf;         // the diagonal chord
  double alphaRotated{0.0};         // slope bound in the rotated frame
  bool clausesPass{true};
  std::vector<std::string> clauseFailures;
};

ZetaReport build_zeta_curves(const PreparedFamily& family, int memberIndex,
                             int iMax);

// gamma_{n,m} in Xi_1 for member n at depth m, together with the clause
// verification data of the four defining bullets.
struct GammaReport {
  CurveSample gamma;      // in Xi_1 (world coordinates)
  CurveSample alphaCurve; // the pullback curve in D_q
  bool coincidesNearBoundary{true};
  bool tailMatchesPushforward{true};  // gamma cap T_m = pushed W^ss
  bool xiConnectedThetaDisjoint{true};
  bool tConnectedSDisjoint{true};
  double tailSupDistance{0.0};
  bool pass() const {
    return coincidesNearBoundary && tailMatchesPushforward &&
           xiConnectedThetaDisjoint && tConnectedSDisjoint;
  }
};

CurveSample gamma_zero(const PreparedFamily& family);

GammaReport build_gamma_family(const PreparedFamily& family,
                               const WellSystem& ws, int n, int m);

// The multi-scale x grid used to sample alpha_{n,m} in D_q (exported so the
// independent pre-solution verifier can resolve the same features).
std::vector<double> alpha_grid(const PreparedFamily& family, int n, int m);

// Witnessed upper bound on the eta-cost carrying `source` to `target` inside
// `container`; graph transport in an admitted frame (axis or 45-degree).
CostCertificate eta_cost(const CurveSample& source, const CurveSample& target,
                         const Round& container, double eta);

}  // namespace mifs
