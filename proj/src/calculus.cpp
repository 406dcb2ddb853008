#include "geonewton/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace geonewton {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Caps the objective-scaled gradient step well inside the injectivity radius.
constexpr double kMaxGradientStep = 1e-3;
constexpr double kSymmetryTol = 1e-12;

double checked(double v) {
  if (!std::isfinite(v)) throw EvaluationError("objective value is not finite");
  return v;
}

// J(R_p(v)) - J(p).
double pulled_back_increment(const Objective& j, const Manifold& m, const RetractionSpec& r,
                             const TangentVector& v) {
  return checked(j.increment(v.base(), m.retract_offset(r, v)));
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::Rayleigh ? "rayleigh" : "procrustes";
}

// ---------------------------------------------------------------------------
// Objective

Objective Objective::rayleigh(Eigen::MatrixXd a) {
  if (a.rows() != a.cols() || a.rows() < 2) {
    throw ContractViolation("Rayleigh matrix must be square with n >= 2");
  }
  if (!a.allFinite()) throw ContractViolation("Rayleigh matrix has non-finite entries");
  if ((a - a.transpose()).norm() > kSymmetryTol) {
    throw ContractViolation("Rayleigh matrix must be symmetric");
  }
  return {ObjectiveKind::Rayleigh, std::move(a)};
}

Objective Objective::procrustes(Eigen::Matrix3d a) {
  if (!a.allFinite()) throw ContractViolation("Procrustes matrix has non-finite entries");
  return {ObjectiveKind::ProcrustesTrace, Eigen::MatrixXd(a)};
}

bool Objective::compatible(const Manifold& m) const {
  if (kind_ == ObjectiveKind::Rayleigh) {
    return m.kind() == ManifoldKind::Sphere && m.ambient_dim() == a_.rows();
  }
  return m.kind() == ManifoldKind::Rotations3;
}

double Objective::value(const Point& p) const {
  const Eigen::VectorXd& x = p.coords();
  if (kind_ == ObjectiveKind::Rayleigh) return x.dot(a_ * x);
  return -Eigen::Map<const Eigen::VectorXd>(a_.data(), 9).dot(x);
}

double Objective::increment(const Point& p, const Eigen::VectorXd& offset) const {
  if (kind_ == ObjectiveKind::Rayleigh) {
    // (x+d)^T A (x+d) - x^T A x = d^T A (2x + d) for symmetric A.
    return offset.dot(a_ * (2.0 * p.coords() + offset));
  }
  return -Eigen::Map<const Eigen::VectorXd>(a_.data(), 9).dot(offset);
}

void check_objective(const Objective& j, const Manifold& m) {
  if (!j.compatible(m)) {
    throw ConfigurationError("objective '" + to_string(j.kind()) + "' is not defined on " +
                             m.name());
  }
}

double evaluate(const Objective& j, const Manifold& m, const Point& p) {
  check_objective(j, m);
  if (p.size() != m.ambient_dim()) throw ContractViolation("point does not belong to manifold");
  return checked(j.value(p));
}

// ---------------------------------------------------------------------------
// SymmetricOperator

SymmetricOperator::SymmetricOperator(TangentBasis basis, const Eigen::MatrixXd& matrix)
    : basis_(std::move(basis)), matrix_(0.5 * (matrix + matrix.transpose())) {
  const auto d = static_cast<Eigen::Index>(basis_.vectors.size());
  if (matrix.rows() != d || matrix.cols() != d) {
    throw ContractViolation("operator matrix does not match basis dimension");
  }
}

TangentVector SymmetricOperator::apply(const Manifold& m, const TangentVector& v) const {
  return m.from_coordinates(basis_, matrix_ * m.coordinates(basis_, v));
}

// ---------------------------------------------------------------------------
// Finite differences

double gradient_step(double objective_value) {
  return std::min(std::cbrt(kEps) * (1.0 + std::abs(objective_value)), kMaxGradientStep);
}

double hessian_step() { return std::pow(kEps, 0.25); }

GradientResult gradient_fd(const Objective& j, const Manifold& m, const RetractionSpec& r,
                           const Point& p) {
  check_objective(j, m);
  m.check_retraction(r);
  const double h = gradient_step(evaluate(j, m, p));
  const TangentBasis basis = m.tangent_basis(p);
  Eigen::VectorXd c(m.intrinsic_dim());
  for (int i = 0; i < m.intrinsic_dim(); ++i) {
    const TangentVector& e = basis.vectors[static_cast<std::size_t>(i)];
    const double f1 = pulled_back_increment(j, m, r, e * h) - pulled_back_increment(j, m, r, e * -h);
    const double f2 =
        pulled_back_increment(j, m, r, e * (2.0 * h)) - pulled_back_increment(j, m, r, e * (-2.0 * h));
    // Fourth-order central stencil; odd Taylor terms of J o R_p cancel to O(h^4).
    c(i) = (8.0 * f1 - f2) / (12.0 * h);
  }
  return {m.from_coordinates(basis, c), h};
}

SymmetricOperator hessian_fd(const Objective& j, const Manifold& m, const RetractionSpec& r,
                             const Point& p) {
  check_objective(j, m);
  m.check_retraction(r);
  const double h = hessian_step();
  TangentBasis basis = m.tangent_basis(p);
  const int d = m.intrinsic_dim();
  Eigen::MatrixXd hm(d, d);
  for (int i = 0; i < d; ++i) {
    const TangentVector& ei = basis.vectors[static_cast<std::size_t>(i)];
    for (int k = 0; k < d; ++k) {
      const TangentVector& ek = basis.vectors[static_cast<std::size_t>(k)];
      const TangentVector pp = ei * h + ek * h;
      const TangentVector pm = ei * h - ek * h;
      const double sum = pulled_back_increment(j, m, r, pp) - pulled_back_increment(j, m, r, pm) -
                         pulled_back_increment(j, m, r, -pm) + pulled_back_increment(j, m, r, -pp);
      hm(i, k) = sum / (4.0 * h * h);
    }
  }
  return {std::move(basis), hm};
}

double taylor_remainder(const Objective& j, const Manifold& m, const RetractionSpec& r,
                        const TangentVector& grad, const SymmetricOperator& hess,
                        const TangentVector& v) {
  const double jump = pulled_back_increment(j, m, r, v);
  const double linear = m.inner(v, grad);
  const double quadratic = 0.5 * m.inner(v, hess.apply(m, v));
  return std::abs(jump - linear - quadratic);
}

double taylor_remainder(const Objective& j, const Manifold& m, const RetractionSpec& r,
                        const Point& p, const TangentVector& v) {
  const GradientResult g = gradient_fd(j, m, r, p);
  const SymmetricOperator hess = hessian_fd(j, m, r, p);
  return taylor_remainder(j, m, r, g.vector, hess, v);
}

// ---------------------------------------------------------------------------
// Oracles

TangentVector analytic_gradient(const Objective& j, const Manifold& m, const Point& p) {
  check_objective(j, m);
  const Eigen::MatrixXd& a = j.matrix();
  if (j.kind() == ObjectiveKind::Rayleigh) {
    const Eigen::VectorXd& x = p.coords();
    const Eigen::VectorXd ax = a * x;
    return m.project(p, 2.0 * (ax - x.dot(ax) * x));
  }
  if (j.kind() == ObjectiveKind::ProcrustesTrace) {
    return m.project(p, -Eigen::Map<const Eigen::VectorXd>(a.data(), 9));
  }
  throw NotImplementedError("no analytic gradient for this objective");
}

SymmetricOperator analytic_hessian(const Objective& j, const Manifold& m, const Point& p) {
  check_objective(j, m);
  TangentBasis basis = m.tangent_basis(p);
  const int d = m.intrinsic_dim();
  const Eigen::MatrixXd& a = j.matrix();
  if (j.kind() == ObjectiveKind::Rayleigh) {
    const Eigen::MatrixXd b = basis.matrix();
    const double rho = p.coords().dot(a * p.coords());
    Eigen::MatrixXd hm = 2.0 * (b.transpose() * a * b - rho * Eigen::MatrixXd::Identity(d, d));
    return {std::move(basis), hm};
  }
  // d^2/dt^2 J(Q exp(t W)) = -trace(A^T Q W^2); polarize over the generators.
  const Eigen::Matrix3d atq = Eigen::Matrix3d(a).transpose() * so3::unflatten(p.coords());
  Eigen::MatrixXd hm(3, 3);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d wi = so3::generator(i) / std::numbers::sqrt2;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Matrix3d wk = so3::generator(k) / std::numbers::sqrt2;
      hm(i, k) = -0.5 * (atq * (wi * wk + wk * wi)).trace();
    }
  }
  return {std::move(basis), hm};
}

std::vector<Point> critical_points(const Objective& j, const Manifold& m) {
  check_objective(j, m);
  std::vector<Point> out;
  if (j.kind() == ObjectiveKind::Rayleigh) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j.matrix());
    for (Eigen::Index k = eig.eigenvalues().size() - 1; k >= 0; --k) {
      Eigen::VectorXd v = eig.eigenvectors().col(k);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0.0) v = -v;
      out.push_back(m.nearest_point(v));
      out.push_back(m.nearest_point(-v));
    }
    return out;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(Eigen::Matrix3d(j.matrix()),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  for (int mask = 0; mask < 8; ++mask) {
    Eigen::Vector3d signs;
    for (int k = 0; k < 3; ++k) signs(k) = (mask >> k) & 1 ? -1.0 : 1.0;
    const Eigen::Matrix3d q = u * signs.asDiagonal() * v.transpose();
    if (q.determinant() > 0.0) out.push_back(m.nearest_point(so3::flatten(q)));
  }
  // Global minimizer (the polar factor when det A > 0) first.
  std::stable_sort(out.begin(), out.end(), [&](const Point& x, const Point& y) {
    return j.value(x) < j.value(y);
  });
  return out;
}

Point nearest_critical_point(const Objective& j, const Manifold& m, const Point& p) {
  const std::vector<Point> candidates = critical_points(j, m);
  const auto best = std::min_element(
      candidates.begin(), candidates.end(),
      [&](const Point& x, const Point& y) { return m.distance(p, x) < m.distance(p, y); });
  return *best;
}

}  // namespace geonewton
