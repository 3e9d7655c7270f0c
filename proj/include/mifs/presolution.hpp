#pragma once

#include "mifs/fragmentation.hpp"

namespace mifs {

struct PreSolutionReport {
  int depth{0};
  bool s1{false}, s2{false}, s3{false}, s4{false}, s5{false};
  double s1Residual{0.0};   // distance of Q from W^ss_loc(q)
  double s5Residual{0.0};   // sup distance of the two curves on T_l
  std::vector<int> admissibleSupport;  // annulus indices carrying factors
  bool pass() const { return s1 && s2 && s3 && s4 && s5; }
};

struct PreSolution {
  MarkovIfs G;
  PreSolutionReport report;
  CostCertificate cost;
  int n0{0};
  int m{0};
  double c1Size{0.0};
  double c0Size{0.0};
  double telescopingResidual{0.0};
  CurveSample wss;  // W^ss_loc(q) of G on the multi-scale window
};

// Admissible perturbation realizing the depth-m pre-solution on member n0.
PreSolution build_presolution(const PreparedFamily& family, const WellSystem& ws,
                              int n0, int m, double eta);

// Independent verification of (S1)-(S5) on an IFS whose return branch is
// `periodicBranch` of the family layout.
PreSolutionReport check_presolution(const MarkovIfs& G,
                                    const PreparedFamily& family,
                                    const WellSystem& ws, int n0, int depth,
                                    CurveSample* wssOut = nullptr);

struct CurvePiece {
  std::vector<int> pullWord;   // letters pulled back from the root, newest first
  Word refinedWord;            // the level-l refined disc carrying the piece
  CurveSample curve;
  bool hasOrbitPoint{false};
  bool hasHomoclinicPoint{false};
  double invarianceResidual{0.0};
};

struct InvariantCurveFamily {
  int level{0};
  std::vector<CurvePiece> pieces;
  double maxInvarianceResidual{0.0};
  bool univalent{true};
};

InvariantCurveFamily extract_invariant_curves(const MarkovIfs& G,
                                              const PreparedFamily& family,
                                              const CurveSample& wssRoot,
                                              int level);

struct NormalStrengthReport {
  int k1{0};
  double minNormal{1.0};
  double maxNormal{1.0};
  double impliedEta{0.0};
  int samplesUsed{0};
};

NormalStrengthReport normal_strength(const MarkovIfs& G,
                                     const InvariantCurveFamily& gamma, int k1);

struct DwellReport {
  int L{0};
  double r{0.0};
  int ell0{0};
  int minH{0};
  int samplesUsed{0};
  bool intervalStructureOk{true};
  bool boundHolds{true};
  bool inconclusive{false};
};

// Backward-itinerary dwell statistics near orb(q): W = B(q, wRadius).
DwellReport dwell_distribution(const MarkovIfs& G,
                               const InvariantCurveFamily& gamma, int L,
                               double wRadius);

struct PipelineConfig {
  int jobs{0};  // parallel depth builds; 0 = hardware concurrency
  double eps{0.4};
  double eps0{0.05};
  double etaTarget{0.31};
  double etaCost{0.05};  // epsilon_2 of the admissible perturbations
  std::vector<int> depthOffsets{0, 5, 10};
  std::vector<int> absoluteDepths;  // when set, overrides the offsets
  int dwellL{40};
  double dwellW{0.6};
};

struct DepthResult {
  int m{0};
  PreSolutionReport presol;
  long long K{0};
  double impliedEta{0.0};
  double c1Size{0.0};
  double c0Size{0.0};
  double telescoping{0.0};
  int curvePieces{0};
  double invarianceResidual{0.0};
  bool univalent{false};
  bool anchorsOk{false};
};

struct PipelineReport {
  long long c{0};
  int n0{0};
  int m2{0};
  std::vector<DepthResult> depths;
  bool costDepthIndependent{true};
  bool etaMonotone{true};
  bool etaBelowTarget{false};
  DwellReport dwell;
  bool cocycleAtOne{false};
  bool admissible{true};
  bool budgetsOk{true};
};

PipelineReport build_weak_curves_end_to_end(const PreparedFamily& family,
                                            const FlexiblePath& path,
                                            const PipelineConfig& cfg);

// Multi-scale sampling grid used for the strong stable manifold of deep
// members (dense around the detour features of depth m).
std::vector<double> wss_grid(const PreparedFamily& family, int n, int m);

// Graph-transform strong stable manifold of a return chain on a given grid.
CurveSample wss_on_grid(const MapChain& returnChain, const Point2& fixedPoint,
                        const std::vector<double>& xs);

}  // namespace mifs
