#include "geonewton/newton.hpp"

#include <cmath>
#include <sstream>

namespace geonewton {

namespace {
constexpr double kResidualTol = 1e-10;
}

void NewtonConfig::validate() const {
  if (!(tol > 0.0)) throw ContractViolation("newton tol must be positive");
  if (max_iter < 1) throw ContractViolation("newton max_iter must be at least 1");
  if (!(cond_cap > 1.0)) throw ContractViolation("newton cond_cap must exceed 1");
}

std::string to_string(NewtonStatus status) {
  switch (status) {
    case NewtonStatus::Converged:
      return "converged";
    case NewtonStatus::MaxIter:
      return "max_iter";
    case NewtonStatus::SingularHessian:
      return "singular_hessian";
  }
  return "unknown";
}

TangentVector solve_tangent_system(const Manifold& m, const SymmetricOperator& h,
                                   const TangentVector& g, double cond_cap) {
  const Eigen::VectorXd rhs = -m.coordinates(h.basis(), g);
  const Eigen::MatrixXd& a = h.matrix();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd mags = eig.eigenvalues().cwiseAbs();
  const double largest = mags.maxCoeff();
  const double smallest = mags.minCoeff();
  if (!(smallest > 0.0) || largest / smallest > cond_cap) {
    std::ostringstream os;
    os << "Hessian condition estimate " << (smallest > 0.0 ? largest / smallest : INFINITY)
       << " exceeds cap " << cond_cap;
    throw SingularHessian(os.str());
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::VectorXd s = ldlt.solve(rhs);
  // One step of iterative refinement.
  s += ldlt.solve(rhs - a * s);
  const double residual = (a * s - rhs).norm();
  if (!s.allFinite() || residual > kResidualTol * (1.0 + rhs.norm())) {
    throw SingularHessian("tangent system residual above tolerance");
  }
  return m.from_coordinates(h.basis(), s);
}

TangentVector newton_direction(const Objective& j, const Manifold& m, const RetractionSpec& r,
                               const Point& p, double cond_cap) {
  const GradientResult g = gradient_fd(j, m, r, p);
  const SymmetricOperator h = hessian_fd(j, m, r, p);
  return solve_tangent_system(m, h, g.vector, cond_cap);
}

Point newton_step(const Objective& j, const Manifold& m, const RetractionSpec& r, const Point& p,
                  double cond_cap) {
  return m.retract(r, newton_direction(j, m, r, p, cond_cap));
}

IterationTrace newton_run(const Objective& j, const Manifold& m, const NewtonConfig& cfg,
                          const Point& p0) {
  cfg.validate();
  check_objective(j, m);
  m.check_retraction(cfg.retraction);

  IterationTrace trace;
  trace.points.push_back(p0);
  for (;;) {
    const Point p = trace.points.back();
    const GradientResult g = gradient_fd(j, m, cfg.retraction, p);
    trace.grad_norms.push_back(m.norm(g.vector));
    if (trace.grad_norms.back() <= cfg.tol) {
      trace.status = NewtonStatus::Converged;
      break;
    }
    if (trace.iterations() >= cfg.max_iter) {
      trace.status = NewtonStatus::MaxIter;
      break;
    }
    TangentVector step;
    try {
      const SymmetricOperator h = hessian_fd(j, m, cfg.retraction, p);
      step = solve_tangent_system(m, h, g.vector, cfg.cond_cap);
    } catch (const SingularHessian&) {
      trace.status = NewtonStatus::SingularHessian;
      break;
    }
    trace.step_norms.push_back(m.norm(step));
    trace.points.push_back(m.retract(cfg.retraction, step));
  }
  return trace;
}

}  // namespace geonewton
