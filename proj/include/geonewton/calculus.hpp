#pragma once

// Retraction-induced gradient and Hessian. Both are read off the Taylor
// expansion of J o R_p at 0 by finite differences in an orthonormal tangent
// basis, so they depend on the retraction in use. Closed-form oracles for the
// two supported objective families live alongside.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "geonewton/manifold.hpp"

namespace geonewton {

enum class ObjectiveKind { Rayleigh, ProcrustesTrace };

std::string to_string(ObjectiveKind kind);

/// Rayleigh: J(x) = x^T A x on Sphere(n), A symmetric.
/// ProcrustesTrace: J(Q) = -trace(A^T Q) on SO(3).
class Objective {
 public:
  static Objective rayleigh(Eigen::MatrixXd a);
  static Objective procrustes(Eigen::Matrix3d a);

  ObjectiveKind kind() const { return kind_; }
  const Eigen::MatrixXd& matrix() const { return a_; }

  bool compatible(const Manifold& m) const;

  /// J(p), no manifold check.
  double value(const Point& p) const;
  /// J(p + offset) - J(p), evaluated from the offset so that tiny increments
  /// keep their relative accuracy.
  double increment(const Point& p, const Eigen::VectorXd& offset) const;

 private:
  Objective(ObjectiveKind kind, Eigen::MatrixXd a) : kind_(kind), a_(std::move(a)) {}

  ObjectiveKind kind_;
  Eigen::MatrixXd a_;
};

/// Throws ConfigurationError when the objective does not live on `m`.
void check_objective(const Objective& j, const Manifold& m);

double evaluate(const Objective& j, const Manifold& m, const Point& p);

struct GradientResult {
  TangentVector vector;
  double step = 0.0;
};

/// Hess J(p) as a symmetric matrix in the coordinates of `basis`.
class SymmetricOperator {
 public:
  /// Symmetrizes `matrix` as (M + M^T)/2.
  SymmetricOperator(TangentBasis basis, const Eigen::MatrixXd& matrix);

  const Point& base() const { return basis_.base; }
  const TangentBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  TangentVector apply(const Manifold& m, const TangentVector& v) const;

 private:
  TangentBasis basis_;
  Eigen::MatrixXd matrix_;
};

/// Finite-difference steps.
double gradient_step(double objective_value);
double hessian_step();

GradientResult gradient_fd(const Objective& j, const Manifold& m, const RetractionSpec& r,
                           const Point& p);
SymmetricOperator hessian_fd(const Objective& j, const Manifold& m, const RetractionSpec& r,
                             const Point& p);

/// |J(R_p(v)) - J(p) - <v, grad> - 1/2 <v, Hess v>| with grad/Hess from
/// gradient_fd / hessian_fd at p.
double taylor_remainder(const Objective& j, const Manifold& m, const RetractionSpec& r,
                        const Point& p, const TangentVector& v);

/// Same, reusing a gradient and Hessian already extracted at v.base().
double taylor_remainder(const Objective& j, const Manifold& m, const RetractionSpec& r,
                        const TangentVector& grad, const SymmetricOperator& hess,
                        const TangentVector& v);

TangentVector analytic_gradient(const Objective& j, const Manifold& m, const Point& p);

/// Hessian of an order-2 retraction (equal to the covariant Riemannian
/// Hessian), in the tangent_basis(p) coordinates.
SymmetricOperator analytic_hessian(const Objective& j, const Manifold& m, const Point& p);

/// Isolated critical points of the objective: +-eigenvectors for Rayleigh,
/// the proper-rotation solutions of Q^T A = (Q^T A)^T for Procrustes.
std::vector<Point> critical_points(const Objective& j, const Manifold& m);

/// The critical point closest to p in geodesic distance.
Point nearest_critical_point(const Objective& j, const Manifold& m, const Point& p);

}  // namespace geonewton
