#pragma once

#include <cstdint>
#include <random>

#include "geonewton/manifold.hpp"

namespace geonewton {

/// Seeded generator for experiment instances. The engine is std::mt19937_64
/// (fully specified by the standard); uniforms are built from its raw 64-bit
/// output as (x >> 11) * 2^-53 so that results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Unit tangent vector at p: uniform[-1,1] ambient entries, projected and
/// normalized (redrawn if the projection is tiny).
TangentVector random_unit_tangent(const Manifold& m, const Point& p, Rng& rng);

/// Sphere: normalized uniform[-1,1]^n draw. SO(3): unit quaternion from a
/// normalized uniform[-1,1]^4 draw.
Point random_point(const Manifold& m, Rng& rng);

}  // namespace geonewton
