#pragma once

// Embedded manifolds used by the solver: the unit sphere S^{n-1} in R^n and
// the rotation group SO(3) stored as a column-major flattened 3x3 matrix.
// Both carry the metric induced by the ambient Euclidean (Frobenius) inner
// product.

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

#include "geonewton/errors.hpp"

namespace geonewton {

/// Tolerance used for the point and tangent-vector membership checks.
inline constexpr double kMembershipTol = 1e-12;

class Manifold;

/// A point of an embedded manifold, stored in ambient coordinates.
/// Only a Manifold can construct one, so every Point was validated or
/// produced by a manifold operation.
class Point {
 public:
  Point() = default;

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::Index size() const { return coords_.size(); }

  /// Same ambient coordinates within `tol` (max-norm).
  bool same_as(const Point& other, double tol = kMembershipTol) const;

 private:
  friend class Manifold;
  explicit Point(Eigen::VectorXd coords) : coords_(std::move(coords)) {}

  Eigen::VectorXd coords_;
};

/// Ambient-coordinate vector tangent to the manifold at `base()`.
class TangentVector {
 public:
  TangentVector() = default;

  const Point& base() const { return base_; }
  const Eigen::VectorXd& coords() const { return coords_; }

  TangentVector operator*(double s) const { return {base_, coords_ * s}; }
  TangentVector operator-() const { return {base_, -coords_}; }
  TangentVector operator+(const TangentVector& other) const;
  TangentVector operator-(const TangentVector& other) const;

 private:
  friend class Manifold;
  TangentVector(Point base, Eigen::VectorXd coords)
      : base_(std::move(base)), coords_(std::move(coords)) {}

  Point base_;
  Eigen::VectorXd coords_;
};

inline TangentVector operator*(double s, const TangentVector& v) { return v * s; }

/// Orthonormal basis of T_pM.
struct TangentBasis {
  Point base;
  std::vector<TangentVector> vectors;

  /// ambient_dim x intrinsic_dim matrix whose columns are the basis vectors.
  Eigen::MatrixXd matrix() const;
};

enum class RetractionFamily { Exponential, Projection, Cayley, PerturbedOrder1 };

/// One member of the retraction family together with its order of agreement
/// with the exponential map.
struct RetractionSpec {
  /// Sentinel order for the exponential map itself.
  static constexpr int kUnboundedOrder = std::numeric_limits<int>::max();

  RetractionFamily family = RetractionFamily::Exponential;
  int declared_order = kUnboundedOrder;

  static RetractionSpec of(RetractionFamily family);
  static RetractionSpec exponential() { return of(RetractionFamily::Exponential); }
  static RetractionSpec projection() { return of(RetractionFamily::Projection); }
  static RetractionSpec cayley() { return of(RetractionFamily::Cayley); }
  static RetractionSpec perturbed_order1() { return of(RetractionFamily::PerturbedOrder1); }

  bool operator==(const RetractionSpec&) const = default;
};

std::string to_string(RetractionFamily family);

enum class ManifoldKind { Sphere, Rotations3 };

class Manifold {
 public:
  /// Unit sphere in R^n, n >= 2.
  static Manifold sphere(int ambient_dim);
  static Manifold rotations3();

  ManifoldKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return kind_ == ManifoldKind::Sphere ? ambient_dim_ - 1 : 3; }
  /// "sphere:<n>" or "so3".
  std::string name() const;

  bool operator==(const Manifold&) const = default;

  // --- construction and validation -------------------------------------

  /// Validated point; throws ContractViolation when coords are off the manifold.
  Point point(Eigen::VectorXd coords) const;
  /// Convenience for SO(3).
  Point rotation(const Eigen::Matrix3d& matrix) const;
  /// Nearest point on the manifold (normalization / polar factor).
  Point nearest_point(const Eigen::VectorXd& ambient) const;

  /// Validated tangent vector at `base`.
  TangentVector tangent(const Point& base, Eigen::VectorXd coords) const;
  TangentVector zero(const Point& base) const;

  bool contains(const Eigen::VectorXd& coords, double tol = kMembershipTol) const;
  bool is_tangent(const Point& base, const Eigen::VectorXd& coords,
                  double tol = kMembershipTol) const;

  // --- metric ------------------------------------------------------------

  double inner(const TangentVector& u, const TangentVector& v) const;
  double norm(const TangentVector& v) const;

  /// Orthogonal projection of an ambient vector onto T_pM.
  TangentVector project(const Point& p, const Eigen::VectorXd& w) const;

  // --- geodesics -----------------------------------------------------------

  Point exp(const TangentVector& v) const;
  /// Inverse of exp inside the injectivity radius; throws CutLocusError.
  TangentVector log(const Point& p, const Point& q) const;
  double distance(const Point& p, const Point& q) const;

  // --- retractions ---------------------------------------------------------

  /// Throws ConfigurationError unless `spec` is defined on this manifold.
  void check_retraction(const RetractionSpec& spec) const;
  bool supports(const RetractionSpec& spec) const;

  Point retract(const RetractionSpec& spec, const TangentVector& v) const;
  /// R_p(v) - p in ambient coordinates, evaluated without the cancellation of
  /// forming R_p(v) first. Objective increments are built on top of this.
  Eigen::VectorXd retract_offset(const RetractionSpec& spec, const TangentVector& v) const;
  /// Small-norm v with R_p(v) = q; throws InversionFailure.
  TangentVector inverse_retract(const RetractionSpec& spec, const Point& p, const Point& q) const;

  /// Deterministic orthonormal basis of T_pM.
  TangentBasis tangent_basis(const Point& p) const;

  /// Basis coordinates of v, i.e. <v, e_i>.
  Eigen::VectorXd coordinates(const TangentBasis& basis, const TangentVector& v) const;
  TangentVector from_coordinates(const TangentBasis& basis, const Eigen::VectorXd& c) const;

 private:
  Manifold(ManifoldKind kind, int ambient_dim) : kind_(kind), ambient_dim_(ambient_dim) {}

  void require_point(const Point& p) const;
  void require_same_base(const TangentVector& u, const TangentVector& v) const;
  Eigen::VectorXd exp_offset(const TangentVector& v) const;
  Eigen::VectorXd projection_offset(const Point& p, const Eigen::VectorXd& v) const;
  Eigen::VectorXd perturbed_direction(const TangentVector& v) const;
  TangentVector inverse_perturbed(const Point& p, const TangentVector& w) const;

  ManifoldKind kind_ = ManifoldKind::Sphere;
  int ambient_dim_ = 3;
};

namespace so3 {

/// Column-major flattening used for SO(3) ambient coordinates.
Eigen::VectorXd flatten(const Eigen::Matrix3d& m);
Eigen::Matrix3d unflatten(const Eigen::VectorXd& v);

/// Skew matrix of a 3-vector: hat(w) x = w cross x.
Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Vector3d vee(const Eigen::Matrix3d& skew);
Eigen::Matrix3d skew_part(const Eigen::Matrix3d& m);

/// Generator of rotations about axis 0, 1 or 2 (hat of the unit vector).
Eigen::Matrix3d generator(int axis);

/// Rotation about a coordinate axis.
Eigen::Matrix3d axis_rotation(int axis, double angle);

/// Rodrigues formula.
Eigen::Matrix3d expm(const Eigen::Matrix3d& omega);
/// expm(omega) - I without cancellation.
Eigen::Matrix3d expm_minus_identity(const Eigen::Matrix3d& omega);

/// Rotation angle in [0, pi], accurate near 0 and near pi.
double rotation_angle(const Eigen::Matrix3d& r);

/// Principal logarithm; throws CutLocusError at angles >= pi - 1e-6.
Eigen::Matrix3d logm(const Eigen::Matrix3d& r);

}  // namespace so3

}  // namespace geonewton
