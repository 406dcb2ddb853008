#include "geonewton/random.hpp"

namespace geonewton {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

TangentVector random_unit_tangent(const Manifold& m, const Point& p, Rng& rng) {
  for (;;) {
    Eigen::VectorXd w(m.ambient_dim());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1.0, 1.0);
    const TangentVector t = m.project(p, w);
    const double n = m.norm(t);
    if (n > 1e-3) return t * (1.0 / n);
  }
}

Point random_point(const Manifold& m, Rng& rng) {
  if (m.kind() == ManifoldKind::Sphere) {
    for (;;) {
      Eigen::VectorXd x(m.ambient_dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
      if (x.norm() > 1e-3) return m.nearest_point(x);
    }
  }
  for (;;) {
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q(i) = rng.uniform(-1.0, 1.0);
    const double n = q.norm();
    if (n > 1e-3 && n <= 1.0) {
      q /= n;
      const Eigen::Matrix3d r = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
      return m.nearest_point(so3::flatten(r));
    }
  }
}

}  // namespace geonewton
