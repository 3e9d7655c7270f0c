#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mifs {

// Error types raised by the kernels. Reports generally carry failures as
// data; exceptions are reserved for inputs that make an operation undefined.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotInImage : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct NoGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleEpsilon : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SupportTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GluingMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstraintViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ObstructionConflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DepthInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CostExceedsHomothety : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotGraphRepresentable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnivalenceViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SupportCollision : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace tol {
// Module-level default tolerances. Every report quotes the ones it used.
inline constexpr double kInverseRoundTrip = 1e-9;
inline constexpr double kFixedPoint = 1e-12;
inline constexpr double kNewton = 1e-12;
inline constexpr double kJacobianFD = 1e-5;
inline constexpr double kGraphTransform = 1e-10;
inline constexpr double kCurveInvariance = 1e-8;
inline constexpr double kHomothetyIdentity = 1e-10;
inline constexpr double kRoundness = 1e-8;
inline constexpr double kSsAxis = 1e-8;
inline constexpr double kS5Sup = 1e-7;
inline constexpr double kCompositionResidual = 1e-6;
inline constexpr double kWellMembership = 1e-8;
inline constexpr double kSeparationGap = 1e-3;
inline constexpr double kCocycleUnitEigen = 1e-10;
}  // namespace tol

// Deterministic PRNG used only for sampling. SplitMix64: identical output on
// every platform, unlike the std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9E3779B97F4A7C15ull) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

inline std::uint64_t seed_from_env() {
  if (const char* s = std::getenv("MIFS_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
    }
  }
  return 0x9E3779B97F4A7C15ull;
}

}  // namespace mifs
