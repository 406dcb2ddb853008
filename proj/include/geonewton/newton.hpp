#pragma once

// Pure geometric Newton iteration p -> R_p(-Hess J(p)^{-1} grad J(p)) with
// gradient and Hessian induced by the same retraction R. No globalization.

#include <string>
#include <vector>

#include "geonewton/calculus.hpp"
#include "geonewton/manifold.hpp"

namespace geonewton {

struct NewtonConfig {
  double tol = 1e-12;  ///< stop when |grad J(p)| <= tol
  int max_iter = 50;   ///< maximum number of Newton steps
  double cond_cap = 1e12;
  RetractionSpec retraction = RetractionSpec::exponential();

  void validate() const;
};

enum class NewtonStatus { Converged, MaxIter, SingularHessian };

std::string to_string(NewtonStatus status);

struct IterationTrace {
  std::vector<Point> points;       ///< p_0, ..., p_k
  std::vector<double> grad_norms;  ///< |grad J(p_i)| for every recorded point
  std::vector<double> step_norms;  ///< one per step; points.size() - 1 entries
  NewtonStatus status = NewtonStatus::MaxIter;

  int iterations() const { return static_cast<int>(step_norms.size()); }
};

/// s with H s = -g. Throws SingularHessian when the condition estimate of H
/// exceeds cond_cap, when H has a zero eigenvalue, or when the solve misses
/// the residual bound.
TangentVector solve_tangent_system(const Manifold& m, const SymmetricOperator& h,
                                   const TangentVector& g, double cond_cap = 1e12);

/// Newton vector -Hess^{-1} grad at p.
TangentVector newton_direction(const Objective& j, const Manifold& m, const RetractionSpec& r,
                               const Point& p, double cond_cap = 1e12);

Point newton_step(const Objective& j, const Manifold& m, const RetractionSpec& r, const Point& p,
                  double cond_cap = 1e12);

IterationTrace newton_run(const Objective& j, const Manifold& m, const NewtonConfig& cfg,
                          const Point& p0);

}  // namespace geonewton
