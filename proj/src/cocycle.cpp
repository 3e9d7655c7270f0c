#include "mifs/cocycle.hpp"

#include <cmath>

namespace mifs {

const Cocycle& FlexiblePath::at(double t) const {
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = std::abs(samples[i].first - t);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return samples[best].second;
}

Cocycle FlexiblePath::interpolate(double t) const {
  if (samples.empty()) return {};
  if (t <= samples.front().first) return samples.front().second;
  if (t >= samples.back().first) return samples.back().second;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (t >= samples[i].first && t <= samples[i + 1].first) {
      const double w =
          (t - samples[i].first) / (samples[i + 1].first - samples[i].first);
      Cocycle c;
      for (std::size_t k = 0; k < samples[i].second.matrices.size(); ++k)
        c.matrices.push_back((1 - w) * samples[i].second.matrices[k] +
                             w * samples[i + 1].second.matrices[k]);
      return c;
    }
  }
  return samples.back().second;
}

FlexibilityReport validate_flexible(const FlexiblePath& path) {
  FlexibilityReport rep;
  if (path.samples.empty()) return rep;
  const std::size_t n = path.length();

  // (1) per-index diameter over all sample pairs
  double diam = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t a = 0; a < path.samples.size(); ++a)
      for (std::size_t b = a + 1; b < path.samples.size(); ++b)
        diam = std::max(diam, op_norm(path.samples[a].second.matrices[k] -
                                      path.samples[b].second.matrices[k]));
  }
  rep.diameter = diam;
  rep.perIndexDiameter = true;

  // (2) the base cocycle is the path at t = 0
  const Cocycle& base = path.at(0.0);
  rep.matchesBase = true;
  for (std::size_t k = 0; k < n; ++k)
    if (op_norm(base.matrices[k] - path.at(0.0).matrices[k]) > 0) rep.matchesBase = false;

  // (3) distinct positive contracting eigenvalues for t in (-1,1)
  rep.distinctContracting = true;
  double maxSmallest = 0.0;
  for (const auto& [t, c] : path.samples) {
    const Mat2 prod = c.product();
    const Eigen2 ev = eigenvalues2(prod);
    if (t > -1.0 + 1e-12 && t < 1.0 - 1e-12) {
      if (!ev.real || ev.a <= 0.0 || ev.b <= 0.0 ||
          std::abs(ev.a - ev.b) < 1e-12 || std::max(ev.a, ev.b) >= 1.0)
        rep.distinctContracting = false;
    }
    if (ev.real) maxSmallest = std::max(maxSmallest, std::min(ev.a, ev.b));
  }

  // (4) contracting homothety at t = -1
  {
    const Mat2 prod = path.at(-1.0).product();
    const double mu = prod(0, 0);
    rep.homothetyFactor = mu;
    rep.homothetyAtMinusOne =
        op_norm(prod - mu * Mat2::Identity()) < 1e-10 && mu > 0.0 && mu < 1.0;
  }

  // (5) max over t of the smallest eigenvalue < 1
  rep.smallestEigenBelowOne = maxSmallest < 1.0;

  // (6) unit eigenvalue at t = 1
  {
    const Mat2 prod = path.at(1.0).product();
    const Eigen2 ev = eigenvalues2(prod);
    double res = 1e300;
    if (ev.real) res = std::min(std::abs(ev.a - 1.0), std::abs(ev.b - 1.0));
    rep.unitEigenResidual = res;
    rep.unitEigenAtOne = res < tol::kCocycleUnitEigen;
  }
  return rep;
}

FlexiblePath canonical_flexible_path(int n, double lambda1, double epsilon,
                                     int tSamples) {
  if (n < 1) throw InfeasibleEpsilon("cocycle length must be positive");
  const double a = std::pow(lambda1, 1.0 / n);
  const double need = 1.0 - a;  // b must travel from a (t=-1) to 1 (t=1)
  if (need >= epsilon)
    throw InfeasibleEpsilon(
        "per-matrix change " + std::to_string(need) +
        " does not fit below epsilon = " + std::to_string(epsilon));
  const double lambda2 = std::sqrt(lambda1);
  const double b0 = std::pow(lambda2, 1.0 / n);

  FlexiblePath path;
  path.epsilon = epsilon;
  auto bOf = [&](double t) {
    if (t <= 0.0) return a + (b0 - a) * (t + 1.0);
    return b0 + (1.0 - b0) * t;
  };
  for (int i = 0; i < tSamples; ++i) {
    const double t = -1.0 + 2.0 * i / (tSamples - 1);
    Cocycle c;
    for (int k = 0; k < n; ++k) {
      Mat2 m = Mat2::Zero();
      m(0, 0) = a;
      m(1, 1) = bOf(t);
      c.matrices.push_back(m);
    }
    path.samples.push_back({t, c});
  }
  return path;
}

MarkovIfs realize_deformation(const MarkovIfs& ifs, const PeriodicOrbit& orbit,
                              const FlexiblePath& path, double tStart,
                              double tEnd, const DeformationOptions& opt) {
  if (!is_separated(ifs, orbit))
    throw DomainError("deformation requires a separated orbit");
  const std::size_t n = orbit.word.size();
  if (path.length() != n)
    throw DomainError("path length does not match the orbit period");

  // Verify the current derivative cocycle matches the path at tStart.
  for (std::size_t i = 0; i < n; ++i) {
    const Mat2 cur =
        jacobian(ifs.branches[orbit.word.letters[i]].map, orbit.points[i]);
    if (op_norm(cur - path.at(tStart).matrices[i]) > 1e-8)
      throw DomainError("derivative cocycle does not match the path at tStart");
  }
  // Support must not collide with other branch images around the orbit.
  for (std::size_t i = 0; i < n; ++i) {
    const int disc = orbit.discs[i];
    for (std::size_t j = 0; j < ifs.branches.size(); ++j) {
      bool periodic = false;
      for (int l : orbit.word.letters)
        if (static_cast<std::size_t>(l) == j) periodic = true;
      if (periodic || ifs.branches[j].target != disc) continue;
      const Point2 imc =
          apply(ifs.branches[j].map, ifs.disc_center(ifs.branches[j].dom));
      if ((imc - orbit.points[i]).norm() <
          opt.supportRadius + ifs.disc_radius_hint(ifs.branches[j].dom) * 0.0)
        throw SupportTooSmall("support radius reaches registered image data");
    }
  }

  MarkovIfs out = ifs;
  // Number of return steps: realized slowly so each step stays below
  // epsilon * stepFraction per matrix.
  double pathDist = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    pathDist = std::max(pathDist, op_norm(path.at(tEnd).matrices[i] -
                                          path.at(tStart).matrices[i]));
  const double stepBudget = std::max(1e-9, path.epsilon * opt.stepFraction);
  const int steps = std::max(1, static_cast<int>(std::ceil(pathDist / stepBudget)));

  for (std::size_t i = 0; i < n; ++i) {
    const int letter = orbit.word.letters[i];
    MapChain chain = out.branches[letter].map;
    // The correction acts after f in the target disc, around p_{i+1}.
    const Point2 anchor = orbit.points[(i + 1) % n];
    for (int s = 1; s <= steps; ++s) {
      const double t0 = tStart + (tEnd - tStart) * (s - 1) / steps;
      const double t1 = tStart + (tEnd - tStart) * s / steps;
      const Mat2 A0 = path.interpolate(t0).matrices[i];
      const Mat2 A1 = path.interpolate(t1).matrices[i];
      const Mat2 M = A1 * A0.inverse();
      // log(M) for M close to the identity via the Mercator series.
      const Mat2 X = M - Mat2::Identity();
      Mat2 L = Mat2::Zero();
      Mat2 Xp = X;
      for (int k = 1; k <= 12; ++k) {
        L += (k % 2 ? 1.0 : -1.0) / k * Xp;
        Xp = Xp * X;
      }
      MatrixRampField ramp;
      ramp.L = L;
      ramp.center = anchor;
      ramp.rIn = opt.supportRadius / 2.0;
      ramp.rOut = opt.supportRadius;
      BumpFlow bf;
      bf.field = ramp;
      bf.integrationSteps = opt.rampSteps;
      chain = chain.then(MapChain::of(bf));
    }
    out.branches[letter].map = chain;
  }
  return out;
}

}  // namespace mifs
