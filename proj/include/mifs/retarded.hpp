#pragma once

#include "mifs/cocycle.hpp"
#include "mifs/markov.hpp"

namespace mifs {

// Conjugate a primitive by the homothety H_s centered at the origin:
// p -> s * prim(p/s). Flows conjugate to flows of the rescaled field.
Primitive rescale_primitive(const Primitive& prim, double s);

// A retarded family of disc maps: the homothety H_lambda on
// B(R) \ B(lambda^m R), a rescaled fixed core inside, and a common outer
// part on D \ B(R). Cores must carry the shape [Homothety(lambda), flows...]
// with the flows supported strictly inside the core region, which makes the
// members globally representable as a single chain.
struct RetardedFamily {
  MapChain core;       // = member(m0) restricted to B(lambda^{m0} R)
  double lambda{0.5};
  double R{1.0};
  int m0{1};
  MapChain outerPart;  // shared dynamics on D \ B(R) (identity in scenarios)

  MapChain member(int m) const;  // m >= m0
};

// Checks the homothetic collar of the core (GluingMismatch on failure).
RetardedFamily build_retarded(const MapChain& core, double lambda, double R,
                              int m0);

// --- Prepared families ------------------------------------------------------

struct RectSpec {
  double xmin, xmax, ymin, ymax;  // at scale lambda^{tau_n}; multiplied out
};

struct CoreSpec {
  double u1r{0.72}, u2r{0.82}, v0r{0.2};
  int integrationSteps{256};
};

struct PreparedParams {
  double lambda{0.7};
  std::vector<double> lambdas;       // 1 = lambda_0 > ... > lambda_pi = lambda
  std::vector<double> lambdaStars;   // lambda_i^* in (lambda_{i+1}, lambda_i)
  int tau{2};
  int tauPrime{0};                   // 0: use tau_n of the member
  std::vector<RectSpec> betaRects;   // one per i = 0..pi-1, relative scale
  Round xiDisc;                      // Xi_1 = image of the well branch
  std::vector<Round> deltaDiscs;     // obstruction branch images
  CoreSpec core;
};

struct PreparedFamily {
  PreparedParams params;
  MarkovIfs base;          // member template; periodic branch map is replaced
  int qDisc{0};            // index of D_q
  int periodicBranch{0};   // branch of omega(q) into D_q
  int wellBranch{1};       // branch whose image is Xi_1
  std::vector<int> obstructionBranches;
  std::vector<int> transitBranches;  // extra branches along omega(Q)
  Word homoclinicWord;     // omega(Q)
  Point2 homoclinicPoint;

  int tauOf(int n) const { return params.tau + n - 1; }
  double scaleOf(int n) const { return std::pow(params.lambda, tauOf(n)); }
  MarkovIfs member(int n) const;
  MapChain memberReturnMap(int n) const;  // the periodic branch of member n
};

// Direct synthesis of a prepared family on D_q = B(1): the member maps are
// the time-1 flow of the core neutralizer field composed onto H_lambda.
PreparedFamily build_prepared(const PreparedParams& params);

// Retarded + saddle-node members built over an existing scenario base: the
// periodic branch is replaced per member index; all other branches are kept.
std::vector<MarkovIfs> build_saddle_node_family(const PreparedFamily& family,
                                                const FlexiblePath& path,
                                                int mLo, int mHi);

struct ConditionResult {
  std::string name;
  bool pass{false};
  double margin{0.0};
};

struct PreparednessReport {
  std::vector<ConditionResult> conditions;
  bool pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
  const ConditionResult* find(const std::string& n) const {
    for (const auto& c : conditions)
      if (c.name == n) return &c;
    return nullptr;
  }
};

// Verifies P0-P3 on member `n` of the family (default: the first member).
PreparednessReport verify_prepared(const PreparedFamily& family, int n = 1);

}  // namespace mifs
