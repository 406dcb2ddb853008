#include "geonewton/manifold.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace geonewton {

namespace {

// Angles at or beyond pi - kCutLocusMargin are treated as the cut locus.
constexpr double kCutLocusMargin = 1e-6;
// Below this rotation angle the Rodrigues coefficients use their series.
constexpr double kSmallAngle = 1e-4;
// Gram-Schmidt candidates shorter than this after projection are skipped.
constexpr double kDegenerateCandidate = 1e-8;

constexpr double kRoundTripTol = 1e-10;

double scale_of(const Eigen::VectorXd& v) { return std::max(1.0, v.norm()); }

}  // namespace

// ---------------------------------------------------------------------------
// Point / TangentVector / TangentBasis

bool Point::same_as(const Point& other, double tol) const {
  return coords_.size() == other.coords_.size() &&
         (coords_ - other.coords_).lpNorm<Eigen::Infinity>() <= tol;
}

TangentVector TangentVector::operator+(const TangentVector& other) const {
  if (!base_.same_as(other.base_)) {
    throw ContractViolation("tangent vectors live at different base points");
  }
  return {base_, coords_ + other.coords_};
}

TangentVector TangentVector::operator-(const TangentVector& other) const {
  if (!base_.same_as(other.base_)) {
    throw ContractViolation("tangent vectors live at different base points");
  }
  return {base_, coords_ - other.coords_};
}

Eigen::MatrixXd TangentBasis::matrix() const {
  Eigen::MatrixXd m(base.size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = vectors[i].coords();
  }
  return m;
}

RetractionSpec RetractionSpec::of(RetractionFamily family) {
  switch (family) {
    case RetractionFamily::Exponential:
      return {family, kUnboundedOrder};
    case RetractionFamily::Projection:
    case RetractionFamily::Cayley:
      return {family, 2};
    case RetractionFamily::PerturbedOrder1:
      return {family, 1};
  }
  throw ConfigurationError("unknown retraction family");
}

std::string to_string(RetractionFamily family) {
  switch (family) {
    case RetractionFamily::Exponential:
      return "exp";
    case RetractionFamily::Projection:
      return "projection";
    case RetractionFamily::Cayley:
      return "cayley";
    case RetractionFamily::PerturbedOrder1:
      return "perturbed";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// SO(3) helpers

namespace so3 {

Eigen::VectorXd flatten(const Eigen::Matrix3d& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), 9);
}

Eigen::Matrix3d unflatten(const Eigen::VectorXd& v) {
  if (v.size() != 9) throw ContractViolation("SO(3) coordinates need 9 entries");
  return Eigen::Map<const Eigen::Matrix3d>(v.data());
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& s) { return {s(2, 1), s(0, 2), s(1, 0)}; }

Eigen::Matrix3d skew_part(const Eigen::Matrix3d& m) { return 0.5 * (m - m.transpose()); }

Eigen::Matrix3d generator(int axis) { return hat(Eigen::Vector3d::Unit(axis)); }

Eigen::Matrix3d axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

Eigen::Matrix3d expm_minus_identity(const Eigen::Matrix3d& omega) {
  const Eigen::Matrix3d s = skew_part(omega);
  const double theta = vee(s).norm();
  double a;  // sin(theta)/theta
  double b;  // (1 - cos(theta))/theta^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    const double half = std::sin(0.5 * theta) / theta;
    b = 2.0 * half * half;
  }
  return a * s + b * s * s;
}

Eigen::Matrix3d expm(const Eigen::Matrix3d& omega) {
  return Eigen::Matrix3d::Identity() + expm_minus_identity(omega);
}

double rotation_angle(const Eigen::Matrix3d& r) {
  const double sin_theta = vee(skew_part(r)).norm();
  const double cos_theta = 0.5 * (r.trace() - 1.0);
  return std::atan2(sin_theta, cos_theta);
}

Eigen::Matrix3d logm(const Eigen::Matrix3d& r) {
  const double theta = rotation_angle(r);
  if (theta >= std::numbers::pi - kCutLocusMargin) {
    throw CutLocusError("rotation angle at the cut locus (pi)");
  }
  const Eigen::Matrix3d skew = skew_part(r);
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * skew;
  }
  if (theta < 0.75 * std::numbers::pi) {
    return (theta / std::sin(theta)) * skew;
  }
  // Near pi the skew part is tiny; recover the axis from the symmetric part
  // (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T.
  const double c = std::cos(theta);
  const Eigen::Matrix3d outer =
      (0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
  Eigen::Index k = 0;
  outer.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = outer.col(k).normalized();
  if (axis.dot(vee(skew)) < 0.0) axis = -axis;
  return theta * hat(axis);
}

}  // namespace so3

// ---------------------------------------------------------------------------
// Manifold

Manifold Manifold::sphere(int ambient_dim) {
  if (ambient_dim < 2) throw ConfigurationError("sphere needs ambient dimension >= 2");
  return {ManifoldKind::Sphere, ambient_dim};
}

Manifold Manifold::rotations3() { return {ManifoldKind::Rotations3, 9}; }

std::string Manifold::name() const {
  if (kind_ == ManifoldKind::Rotations3) return "so3";
  return "sphere:" + std::to_string(ambient_dim_);
}

bool Manifold::contains(const Eigen::VectorXd& coords, double tol) const {
  if (coords.size() != ambient_dim_ || !coords.allFinite()) return false;
  if (kind_ == ManifoldKind::Sphere) return std::abs(coords.norm() - 1.0) <= tol;
  const Eigen::Matrix3d q = so3::unflatten(coords);
  return (q.transpose() * q - Eigen::Matrix3d::Identity()).norm() <= tol && q.determinant() > 0.0;
}

bool Manifold::is_tangent(const Point& base, const Eigen::VectorXd& coords, double tol) const {
  if (coords.size() != ambient_dim_ || !coords.allFinite()) return false;
  const double scaled = tol * scale_of(coords);
  if (kind_ == ManifoldKind::Sphere) return std::abs(base.coords().dot(coords)) <= scaled;
  const Eigen::Matrix3d m = so3::unflatten(base.coords()).transpose() * so3::unflatten(coords);
  return (m + m.transpose()).norm() <= scaled;
}

Point Manifold::point(Eigen::VectorXd coords) const {
  if (coords.size() != ambient_dim_) {
    std::ostringstream os;
    os << name() << " point needs " << ambient_dim_ << " coordinates, got " << coords.size();
    throw ContractViolation(os.str());
  }
  if (!contains(coords)) throw ContractViolation("coordinates are not a point of " + name());
  return Point(std::move(coords));
}

Point Manifold::rotation(const Eigen::Matrix3d& rotation) const {
  if (kind_ != ManifoldKind::Rotations3) throw ContractViolation("rotation() requires so3");
  return point(so3::flatten(rotation));
}

Point Manifold::nearest_point(const Eigen::VectorXd& ambient) const {
  if (ambient.size() != ambient_dim_) throw ContractViolation("dimension mismatch");
  if (kind_ == ManifoldKind::Sphere) {
    const double n = ambient.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ContractViolation("cannot normalize vector");
    return Point(ambient / n);
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(so3::unflatten(ambient),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return Point(so3::flatten(svd.matrixU() * d * svd.matrixV().transpose()));
}

TangentVector Manifold::tangent(const Point& base, Eigen::VectorXd coords) const {
  require_point(base);
  if (coords.size() != ambient_dim_) throw ContractViolation("tangent vector dimension mismatch");
  if (!is_tangent(base, coords)) throw ContractViolation("vector is not tangent at base point");
  return {base, std::move(coords)};
}

TangentVector Manifold::zero(const Point& base) const {
  require_point(base);
  return {base, Eigen::VectorXd::Zero(ambient_dim_)};
}

void Manifold::require_point(const Point& p) const {
  if (p.size() != ambient_dim_) throw ContractViolation("point does not belong to " + name());
}

void Manifold::require_same_base(const TangentVector& u, const TangentVector& v) const {
  require_point(u.base());
  if (!u.base().same_as(v.base())) {
    throw ContractViolation("tangent vectors live at different base points");
  }
}

double Manifold::inner(const TangentVector& u, const TangentVector& v) const {
  require_same_base(u, v);
  // For SO(3) the flattened dot product is trace(U^T V).
  return u.coords().dot(v.coords());
}

double Manifold::norm(const TangentVector& v) const { return v.coords().norm(); }

TangentVector Manifold::project(const Point& p, const Eigen::VectorXd& w) const {
  require_point(p);
  if (w.size() != ambient_dim_) throw ContractViolation("ambient vector dimension mismatch");
  if (kind_ == ManifoldKind::Sphere) {
    const Eigen::VectorXd& x = p.coords();
    return {p, w - x.dot(w) * x};
  }
  const Eigen::Matrix3d q = so3::unflatten(p.coords());
  return {p, so3::flatten(q * so3::skew_part(q.transpose() * so3::unflatten(w)))};
}

// --- geodesics ---------------------------------------------------------------

Eigen::VectorXd Manifold::exp_offset(const TangentVector& v) const {
  const Eigen::VectorXd& x = v.base().coords();
  if (kind_ == ManifoldKind::Sphere) {
    const double r = v.coords().norm();
    if (r == 0.0) return Eigen::VectorXd::Zero(ambient_dim_);
    const double half = std::sin(0.5 * r);
    return (std::sin(r) / r) * v.coords() - (2.0 * half * half) * x;
  }
  const Eigen::Matrix3d q = so3::unflatten(x);
  return so3::flatten(q * so3::expm_minus_identity(q.transpose() * so3::unflatten(v.coords())));
}

Point Manifold::exp(const TangentVector& v) const {
  require_point(v.base());
  return retract(RetractionSpec::exponential(), v);
}

TangentVector Manifold::log(const Point& p, const Point& q) const {
  require_point(p);
  require_point(q);
  if (kind_ == ManifoldKind::Sphere) {
    const Eigen::VectorXd d = q.coords() - p.coords();
    const double theta = distance(p, q);
    if (theta >= std::numbers::pi - kCutLocusMargin) {
      throw CutLocusError("points are (nearly) antipodal");
    }
    Eigen::VectorXd w = d - p.coords().dot(d) * p.coords();
    const double n = w.norm();
    if (n == 0.0) return zero(p);
    w *= theta / n;
    return project(p, w);
  }
  const Eigen::Matrix3d pm = so3::unflatten(p.coords());
  const Eigen::Matrix3d omega = so3::logm(pm.transpose() * so3::unflatten(q.coords()));
  return {p, so3::flatten(pm * omega)};
}

double Manifold::distance(const Point& p, const Point& q) const {
  require_point(p);
  require_point(q);
  if (kind_ == ManifoldKind::Sphere) {
    // Half-angle form stays accurate for nearby and for nearly antipodal points.
    const double chord = (q.coords() - p.coords()).norm();
    const double sum = (q.coords() + p.coords()).norm();
    return 2.0 * std::atan2(chord, sum);
  }
  const Eigen::Matrix3d r = so3::unflatten(p.coords()).transpose() * so3::unflatten(q.coords());
  return std::numbers::sqrt2 * so3::rotation_angle(r);
}

// --- retractions ---------------------------------------------------------------

bool Manifold::supports(const RetractionSpec& spec) const {
  switch (spec.family) {
    case RetractionFamily::Exponential:
      return true;
    case RetractionFamily::Projection:
    case RetractionFamily::PerturbedOrder1:
      return kind_ == ManifoldKind::Sphere;
    case RetractionFamily::Cayley:
      return kind_ == ManifoldKind::Rotations3;
  }
  return false;
}

void Manifold::check_retraction(const RetractionSpec& spec) const {
  if (!supports(spec)) {
    throw ConfigurationError("retraction '" + to_string(spec.family) + "' is not defined on " +
                             name());
  }
  if (spec != RetractionSpec::of(spec.family)) {
    throw ConfigurationError("declared order does not match retraction family");
  }
}

Eigen::VectorXd Manifold::projection_offset(const Point& p, const Eigen::VectorXd& v) const {
  // (p + v)/|p + v| - p = (v + (1 - n) p)/n with 1 - n = (1 - n^2)/(1 + n).
  const Eigen::VectorXd& x = p.coords();
  const double n = (x + v).norm();
  const double one_minus_n2 = (1.0 - x.squaredNorm()) - 2.0 * x.dot(v) - v.squaredNorm();
  return (v + (one_minus_n2 / (1.0 + n)) * x) / n;
}

Eigen::VectorXd Manifold::perturbed_direction(const TangentVector& v) const {
  const TangentBasis basis = tangent_basis(v.base());
  return v.coords() + v.coords().squaredNorm() * basis.vectors.front().coords();
}

Eigen::VectorXd Manifold::retract_offset(const RetractionSpec& spec,
                                         const TangentVector& v) const {
  require_point(v.base());
  check_retraction(spec);
  switch (spec.family) {
    case RetractionFamily::Exponential:
      return exp_offset(v);
    case RetractionFamily::Projection:
      return projection_offset(v.base(), v.coords());
    case RetractionFamily::PerturbedOrder1:
      return projection_offset(v.base(), perturbed_direction(v));
    case RetractionFamily::Cayley: {
      // Q((I - W/2)^{-1}(I + W/2) - I) = Q (I - W/2)^{-1} W.
      const Eigen::Matrix3d q = so3::unflatten(v.base().coords());
      const Eigen::Matrix3d omega = so3::skew_part(q.transpose() * so3::unflatten(v.coords()));
      const Eigen::Matrix3d lhs = Eigen::Matrix3d::Identity() - 0.5 * omega;
      return so3::flatten(q * lhs.partialPivLu().solve(omega));
    }
  }
  throw ConfigurationError("unknown retraction family");
}

Point Manifold::retract(const RetractionSpec& spec, const TangentVector& v) const {
  Eigen::VectorXd x = v.base().coords() + retract_offset(spec, v);
  if (kind_ == ManifoldKind::Sphere) x.normalize();
  return Point(std::move(x));
}

TangentVector Manifold::inverse_perturbed(const Point& p, const TangentVector& w) const {
  // w = v + s u with s = |v|^2, so s^2 - (1 + 2<w,u>) s + |w|^2 = 0; take the root vanishing at w = 0.
  const Eigen::VectorXd u = tangent_basis(p).vectors.front().coords();
  const double b = 1.0 + 2.0 * w.coords().dot(u);
  const double w2 = w.coords().squaredNorm();
  const double disc = b * b - 4.0 * w2;
  if (!(b > 0.0) || !(disc >= 0.0)) {
    throw InversionFailure("perturbed retraction cannot reach q");
  }
  const double s = 2.0 * w2 / (b + std::sqrt(disc));
  return {p, w.coords() - s * u};
}

TangentVector Manifold::inverse_retract(const RetractionSpec& spec, const Point& p,
                                        const Point& q) const {
  require_point(p);
  require_point(q);
  check_retraction(spec);
  TangentVector v;
  switch (spec.family) {
    case RetractionFamily::Exponential:
      try {
        v = log(p, q);
      } catch (const CutLocusError& e) {
        throw InversionFailure(e.what());
      }
      break;
    case RetractionFamily::Projection:
    case RetractionFamily::PerturbedOrder1: {
      // q/<p,q> - p, written in terms of d = q - p.
      const double c = p.coords().dot(q.coords());
      if (!(c > 0.0)) throw InversionFailure("retraction cannot reach q");
      const Eigen::VectorXd d = q.coords() - p.coords();
      v = project(p, d / c);
      if (spec.family == RetractionFamily::PerturbedOrder1) v = inverse_perturbed(p, v);
      break;
    }
    case RetractionFamily::Cayley: {
      const Eigen::Matrix3d pm = so3::unflatten(p.coords());
      const Eigen::Matrix3d r = pm.transpose() * so3::unflatten(q.coords());
      const Eigen::Matrix3d plus = r + Eigen::Matrix3d::Identity();
      if (1.0 + std::cos(so3::rotation_angle(r)) < 1e-12) {
        throw InversionFailure("Cayley transform cannot reach a half-turn");
      }
      // omega = 2 (R - I)(R + I)^{-1}
      const Eigen::Matrix3d omega =
          2.0 * plus.transpose().partialPivLu().solve((r - Eigen::Matrix3d::Identity()).transpose())
                    .transpose();
      v = {p, so3::flatten(pm * so3::skew_part(omega))};
      break;
    }
  }
  const Eigen::VectorXd miss = p.coords() + retract_offset(spec, v) - q.coords();
  if (!v.coords().allFinite() || miss.norm() > kRoundTripTol) {
    throw InversionFailure("retraction round trip misses the target point");
  }
  return v;
}

TangentBasis Manifold::tangent_basis(const Point& p) const {
  require_point(p);
  TangentBasis basis{p, {}};
  const int dim = intrinsic_dim();
  basis.vectors.reserve(static_cast<std::size_t>(dim));
  if (kind_ == ManifoldKind::Rotations3) {
    const Eigen::Matrix3d q = so3::unflatten(p.coords());
    for (int axis = 0; axis < 3; ++axis) {
      basis.vectors.push_back(
          {p, so3::flatten(q * so3::generator(axis) / std::numbers::sqrt2)});
    }
    return basis;
  }
  // Gram-Schmidt over e_0, e_1, ... against {p, accepted}, two passes each.
  std::vector<Eigen::VectorXd> frame{p.coords()};
  for (int i = 0; i < ambient_dim_ && static_cast<int>(basis.vectors.size()) < dim; ++i) {
    Eigen::VectorXd c = Eigen::VectorXd::Unit(ambient_dim_, i);
    c -= p.coords().dot(c) * p.coords();
    if (c.norm() < kDegenerateCandidate) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& f : frame) c -= f.dot(c) * f;
    }
    const double n = c.norm();
    if (n < kDegenerateCandidate) continue;
    c /= n;
    frame.push_back(c);
    basis.vectors.push_back({p, c});
  }
  return basis;
}

Eigen::VectorXd Manifold::coordinates(const TangentBasis& basis, const TangentVector& v) const {
  if (!basis.base.same_as(v.base())) {
    throw ContractViolation("basis and vector live at different base points");
  }
  return basis.matrix().transpose() * v.coords();
}

TangentVector Manifold::from_coordinates(const TangentBasis& basis,
                                         const Eigen::VectorXd& c) const {
  if (c.size() != static_cast<Eigen::Index>(basis.vectors.size())) {
    throw ContractViolation("coordinate vector does not match basis size");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ambient_dim_);
  for (std::size_t i = 0; i < basis.vectors.size(); ++i) {
    x += c(static_cast<Eigen::Index>(i)) * basis.vectors[i].coords();
  }
  return {basis.base, std::move(x)};
}

}  // namespace geonewton
