#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "geonewton/convergence.hpp"
#include "geonewton/random.hpp"

using namespace geonewton;
using Eigen::Matrix3d;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Objective diag321() { return Objective::rayleigh(vec({3, 2, 1}).asDiagonal().toDenseMatrix()); }

ScaleSweep sweep_with(const Manifold& m, const Point& p, int directions, std::uint64_t seed) {
  Rng rng(seed);
  ScaleSweep sweep;
  for (int i = 0; i < directions; ++i) sweep.directions.push_back(random_unit_tangent(m, p, rng));
  return sweep;
}

// Reference least-squares slope, written out from the normal equations.
double reference_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

// --- regression ---------------------------------------------------------------------

TEST(FitLogLog, ExactQuadratic) {
  const std::vector<double> xs = {0.1, 0.01, 0.001};
  const std::vector<double> ys = {1e-2, 1e-4, 1e-6};
  const SlopeEstimate e = fit_loglog(xs, ys, kDefaultNoiseFloor);
  EXPECT_NEAR(e.slope, 2.0, 1e-12);
  EXPECT_NEAR(e.r_squared, 1.0, 1e-12);
  EXPECT_EQ(e.points_used, 3);
  EXPECT_FALSE(e.saturated);
}

TEST(FitLogLog, ExactPowerLawsRecovered) {
  const std::vector<double> xs = ScaleSweep::default_scales();
  for (double k : {0.5, 1.0, 2.0, 3.0, 4.5}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(0.7 * std::pow(x, k));
    const SlopeEstimate e = fit_loglog(xs, ys, 0.0);
    EXPECT_NEAR(e.slope, k, 1e-12);
    EXPECT_NEAR(e.intercept, std::log(0.7), 1e-11);
    EXPECT_NEAR(e.r_squared, 1.0, 1e-12);
  }
}

TEST(FitLogLog, SaturatedBelowFloor) {
  const std::vector<double> xs = {0.1, 0.01, 0.001};
  const std::vector<double> ys = {1e-16, 1e-16, 1e-16};
  const SlopeEstimate e = fit_loglog(xs, ys, 1e-13);
  EXPECT_TRUE(e.saturated);
  const std::vector<double> one = {1e-2, 1e-16, 1e-16};
  EXPECT_TRUE(fit_loglog(xs, one, 1e-13).saturated);
}

TEST(FitLogLog, DiscardsPointsBelowFloor) {
  const std::vector<double> xs = {0.1, 0.01, 0.001, 1e-4};
  const std::vector<double> ys = {1e-3, 1e-6, 1e-9, 1e-14};
  const SlopeEstimate e = fit_loglog(xs, ys, 1e-13);
  EXPECT_EQ(e.points_used, 3);
  EXPECT_NEAR(e.slope, 3.0, 1e-12);
}

TEST(FitLogLog, JitteredCubic) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  const std::vector<double> xs = ScaleSweep::default_scales();
  std::vector<double> ys;
  for (double x : xs) ys.push_back(4.0 * x * x * x * (1.0 + jitter(gen)));
  const SlopeEstimate e = fit_loglog(xs, ys, 0.0);
  EXPECT_GE(e.slope, 2.9);
  EXPECT_LE(e.slope, 3.1);
  EXPECT_NEAR(e.slope, reference_slope(xs, ys), 1e-12);
  EXPECT_GE(e.r_squared, 0.0);
  EXPECT_LE(e.r_squared, 1.0);
}

TEST(FitLogLog, Contracts) {
  const std::vector<double> xs = {0.1, 0.01};
  const std::vector<double> ys = {1.0};
  EXPECT_THROW(fit_loglog(xs, ys, 0.0), ContractViolation);
  const std::vector<double> up = {0.01, 0.1};
  const std::vector<double> two = {1.0, 2.0};
  EXPECT_THROW(fit_loglog(up, two, 0.0), ContractViolation);
  EXPECT_NO_THROW(fit_loglog_pooled(up, two, 0.0));
}

TEST(ScaleSweep, DefaultsAndValidation) {
  const std::vector<double> s = ScaleSweep::default_scales();
  ASSERT_EQ(s.size(), 11u);
  EXPECT_EQ(s.front(), 0.25);
  EXPECT_EQ(s.back(), std::ldexp(1.0, -12));
  EXPECT_EQ(ScaleSweep::dyadic_scales(3, 10).size(), 8u);

  const Manifold m = Manifold::sphere(3);
  const Point p = m.point(vec({1, 0, 0}));
  ScaleSweep sweep;
  sweep.directions.push_back(m.tangent(p, vec({0, 2, 0})));
  EXPECT_THROW(sweep.validate(m), ContractViolation);
  sweep.directions = {m.tangent(p, vec({0, 1, 0}))};
  sweep.scales = {0.1, 0.1};
  EXPECT_THROW(sweep.validate(m), ContractViolation);
  sweep.scales = {0.1, -0.01};
  EXPECT_THROW(sweep.validate(m), ContractViolation);
}

// --- retraction order -----------------------------------------------------------------------

TEST(RetractionOrder, SphereFamilies) {
  const Manifold m = Manifold::sphere(3);
  const Point p = m.nearest_point(vec({1, 2, 3}));
  const ScaleSweep sweep = sweep_with(m, p, 5, 1);
  EXPECT_TRUE(estimate_retraction_order(m, RetractionSpec::exponential(), p, sweep).saturated);
  const SlopeEstimate proj = estimate_retraction_order(m, RetractionSpec::projection(), p, sweep);
  EXPECT_GE(proj.slope, 2.8);
  EXPECT_LE(proj.slope, 3.2);
  const SlopeEstimate pert =
      estimate_retraction_order(m, RetractionSpec::perturbed_order1(), p, sweep);
  EXPECT_GE(pert.slope, 1.8);
  EXPECT_LE(pert.slope, 2.2);
}

TEST(RetractionOrder, RotationsCayley) {
  const Manifold m = Manifold::rotations3();
  Rng rng(3);
  const Point q = random_point(m, rng);
  const ScaleSweep sweep = sweep_with(m, q, 5, 4);
  const SlopeEstimate cay = estimate_retraction_order(m, RetractionSpec::cayley(), q, sweep);
  EXPECT_GE(cay.slope, 2.8);
  EXPECT_LE(cay.slope, 3.2);
  EXPECT_TRUE(estimate_retraction_order(m, RetractionSpec::exponential(), q, sweep).saturated);
}

TEST(RetractionOrder, DeclaredOrderConsistency) {
  // Over 2^-3..2^-10 the slope is at least declared order + 1 - 0.2.
  const Manifold s = Manifold::sphere(4);
  const Manifold so3 = Manifold::rotations3();
  Rng rng(5);
  auto check = [&](const Manifold& m, const RetractionSpec& r) {
    const Point p = random_point(m, rng);
    ScaleSweep sweep = sweep_with(m, p, 3, 6);
    sweep.scales = ScaleSweep::dyadic_scales(3, 10);
    const SlopeEstimate e = estimate_retraction_order(m, r, p, sweep);
    if (r.declared_order == RetractionSpec::kUnboundedOrder) {
      EXPECT_TRUE(e.saturated);
    } else {
      EXPECT_GE(e.slope, r.declared_order + 1 - 0.2);
    }
  };
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::projection(),
                        RetractionSpec::perturbed_order1()})
    check(s, r);
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::cayley()}) check(so3, r);
}

TEST(RetractionOrder, DirectionIndependence) {
  const Manifold s = Manifold::sphere(3);
  const Manifold so3 = Manifold::rotations3();
  Rng rng(8);
  auto spread = [&](const Manifold& m, const RetractionSpec& r) {
    const Point p = random_point(m, rng);
    double lo = 1e300, hi = -1e300;
    for (int d = 0; d < 10; ++d) {
      ScaleSweep sweep;
      sweep.directions = {random_unit_tangent(m, p, rng)};
      const SlopeEstimate e = estimate_retraction_order(m, r, p, sweep);
      lo = std::min(lo, e.slope);
      hi = std::max(hi, e.slope);
    }
    return hi - lo;
  };
  EXPECT_LE(spread(s, RetractionSpec::projection()), 0.3);
  EXPECT_LE(spread(s, RetractionSpec::perturbed_order1()), 0.3);
  EXPECT_LE(spread(so3, RetractionSpec::cayley()), 0.3);
}

TEST(RetractionOrder, SamplesAreOrdered) {
  const Manifold m = Manifold::sphere(3);
  const Point p = m.point(vec({0, 0, 1}));
  const ScaleSweep sweep = sweep_with(m, p, 3, 9);
  const auto samples = sample_retraction_order(m, RetractionSpec::projection(), p, sweep);
  ASSERT_EQ(samples.size(), 33u);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    EXPECT_TRUE(a.direction_id < b.direction_id ||
                (a.direction_id == b.direction_id && a.scale > b.scale));
  }
}

// --- monotone sweeps -------------------------------------------------------------------------

TEST(MonotoneSweeps, NonincreasingBelowQuarterScale) {
  const Manifold s = Manifold::sphere(3);
  const Point p = s.nearest_point(vec({1, -2, 2}));
  const Point p_star = s.point(vec({1, 0, 0}));
  const ScaleSweep sweep = sweep_with(s, p, 3, 10);
  const ScaleSweep star_sweep = sweep_with(s, p_star, 3, 11);

  auto check = [](const std::vector<SweepSample>& samples) {
    std::map<int, std::vector<SweepSample>> by_dir;
    for (const auto& x : samples) by_dir[x.direction_id].push_back(x);
    for (const auto& [id, xs] : by_dir) {
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i - 1].scale > std::ldexp(1.0, -4)) continue;
        if (xs[i].value <= kDefaultNoiseFloor) continue;
        EXPECT_LE(xs[i].value, xs[i - 1].value) << "direction " << id << " scale " << xs[i].scale;
      }
    }
  };
  for (const auto& r : {RetractionSpec::projection(), RetractionSpec::perturbed_order1()}) {
    check(sample_retraction_order(s, r, p, sweep));
    check(sample_taylor_remainder(diag321(), s, r, p, sweep));
    check(sample_lemma1_residual(diag321(), s, r, p_star, star_sweep));
    check(sample_lemma2_deviation(s, r, sweep.directions[0], sweep.directions[1], sweep));
  }
}

// --- lemma 1 ---------------------------------------------------------------------------------

TEST(Lemma1, PerturbedRetractionQuadraticResidual) {
  const Manifold s = Manifold::sphere(3);
  const Point p_star = s.point(vec({1, 0, 0}));
  const SlopeEstimate e = lemma1_residual_slope(diag321(), s, RetractionSpec::perturbed_order1(),
                                                p_star, sweep_with(s, p_star, 5, 12));
  EXPECT_GE(e.slope, 1.8);
  EXPECT_LE(e.slope, 2.2);
  EXPECT_GE(e.r_squared, 0.98);
}

TEST(Lemma1, OrderTwoRetractionsBeatTheBound) {
  // For the symmetric Rayleigh problem, third derivatives of J o exp vanish
  // at eigenvectors, so the residual decays like |v|^3 (inside the |v|^2
  // bound).
  const Manifold s = Manifold::sphere(3);
  const Point p_star = s.point(vec({1, 0, 0}));
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::projection()}) {
    const SlopeEstimate e =
        lemma1_residual_slope(diag321(), s, r, p_star, sweep_with(s, p_star, 5, 12));
    EXPECT_GE(e.slope, 1.9);
    EXPECT_NEAR(e.slope, 3.0, 0.15);
    EXPECT_GE(e.r_squared, 0.98);
  }
}

TEST(Lemma1, PlanarClosedForm) {
  // A = diag(a, b) on the circle, p* = e1, p = (cos s, sin s). With the
  // exponential map v = -s, grad = (b - a) sin 2s and Hess = 2(b - a) cos 2s,
  // so the residual is |b - a| |sin 2s - 2s cos 2s|.
  const Manifold c = Manifold::sphere(2);
  const Objective j = Objective::rayleigh(vec({2, 0.5}).asDiagonal().toDenseMatrix());
  const Point p_star = c.point(vec({1, 0}));
  ScaleSweep sweep;
  sweep.directions = {c.tangent(p_star, vec({0, 1}))};
  const auto samples =
      sample_lemma1_residual(j, c, RetractionSpec::exponential(), p_star, sweep);
  ASSERT_EQ(samples.size(), sweep.scales.size());
  for (const auto& x : samples) {
    const double s = x.scale;
    const double want = 1.5 * std::abs(std::sin(2 * s) - 2 * s * std::cos(2 * s));
    EXPECT_NEAR(x.abscissa, s, 1e-14);
    EXPECT_NEAR(x.value, want, 1e-9 + 1e-3 * want);
  }
}

TEST(Lemma1, NonCriticalPointRejected) {
  const Manifold s = Manifold::sphere(3);
  const Point p = s.nearest_point(vec({1, 1, 0}));
  EXPECT_THROW(lemma1_residual_slope(diag321(), s, RetractionSpec::exponential(), p,
                                     sweep_with(s, p, 2, 13)),
               PreconditionError);
}

TEST(Lemma1, ProcrustesCayley) {
  const Manifold so3 = Manifold::rotations3();
  Matrix3d a = vec({2, 1.5, 1}).asDiagonal();
  const Objective j = Objective::procrustes(a);
  const Point id = so3.rotation(Matrix3d::Identity());
  const SlopeEstimate e = lemma1_residual_slope(j, so3, RetractionSpec::cayley(), id,
                                                sweep_with(so3, id, 3, 14));
  EXPECT_GE(e.slope, 1.9);
}

// --- lemma 2 ---------------------------------------------------------------------------------

TEST(Lemma2, AllFamiliesSecondOrder) {
  const Manifold s = Manifold::sphere(3);
  const Manifold so3 = Manifold::rotations3();
  Rng rng(15);
  auto check = [&](const Manifold& m, const RetractionSpec& r) {
    const Point p = random_point(m, rng);
    for (int pair = 0; pair < 5; ++pair) {
      const TangentVector v = random_unit_tangent(m, p, rng);
      const TangentVector w = random_unit_tangent(m, p, rng);
      const SlopeEstimate e = lemma2_deviation_slope(m, r, p, v, w, ScaleSweep{});
      EXPECT_GE(e.slope, 1.9) << to_string(r.family);
    }
  };
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::projection(),
                        RetractionSpec::perturbed_order1()})
    check(s, r);
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::cayley()}) check(so3, r);
}

TEST(Lemma2, IdenticalDirectionsSaturate) {
  const Manifold s = Manifold::sphere(3);
  const Point p = s.point(vec({0, 1, 0}));
  const TangentVector v = s.tangent(p, vec({0.6, 0, 0.8}));
  const SlopeEstimate e =
      lemma2_deviation_slope(s, RetractionSpec::exponential(), p, v, v, ScaleSweep{});
  EXPECT_TRUE(e.saturated);
  for (const auto& x : sample_lemma2_deviation(s, RetractionSpec::projection(), v, v, ScaleSweep{}))
    EXPECT_LE(x.value, 1e-13);
}

TEST(Lemma2, ClosedFormOnGreatCircle) {
  // Opposite unit directions along one great circle under exp: the points
  // are 2s apart, exactly |v - w|, so the deviation vanishes.
  const Manifold s = Manifold::sphere(3);
  const Point p = s.point(vec({0, 0, 1}));
  const TangentVector v = s.tangent(p, vec({1, 0, 0}));
  const auto samples =
      sample_lemma2_deviation(s, RetractionSpec::exponential(), v, -v, ScaleSweep{});
  for (const auto& x : samples) EXPECT_LE(x.value, 1e-14);
}

// --- taylor remainder --------------------------------------------------------------------------

TEST(TaylorSlope, CubicForAllSphereFamilies) {
  const Manifold s = Manifold::sphere(3);
  const Point p = s.nearest_point(vec({1, 2, 3}));
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::projection(),
                        RetractionSpec::perturbed_order1()}) {
    const SlopeEstimate e = taylor_remainder_slope(diag321(), s, r, p, sweep_with(s, p, 5, 16));
    EXPECT_GE(e.slope, 2.7) << to_string(r.family);
    EXPECT_LE(e.slope, 3.3) << to_string(r.family);
  }
  ScaleSweep short_sweep = sweep_with(s, p, 3, 17);
  short_sweep.scales = ScaleSweep::dyadic_scales(2, 8);
  EXPECT_GE(taylor_remainder_slope(diag321(), s, RetractionSpec::exponential(), p, short_sweep)
                .slope,
            2.8);
}

TEST(TaylorSlope, Procrustes) {
  const Manifold so3 = Manifold::rotations3();
  Rng rng(18);
  const Point q = random_point(so3, rng);
  const Objective j = Objective::procrustes(Matrix3d(vec({2, 1.5, 1}).asDiagonal()));
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::cayley()}) {
    const SlopeEstimate e = taylor_remainder_slope(j, so3, r, q, sweep_with(so3, q, 5, 19));
    EXPECT_TRUE(e.saturated || (e.slope >= 2.7 && e.slope <= 3.3)) << e.slope;
  }
}

// --- convergence rate -----------------------------------------------------------------------------

TEST(ConvergenceRate, SyntheticQuadratic) {
  const std::vector<double> errors = {1e-1, 1e-2, 1e-4, 1e-8};
  const RateReport r = convergence_rate(errors);
  EXPECT_NEAR(r.fitted_rate, 2.0, 1e-12);
  EXPECT_NEAR(r.fitted_constant, 1.0, 1e-10);
  EXPECT_EQ(r.pairs_used, 3);
  EXPECT_NEAR(mean_pair_exponent(r), 2.0, 1e-12);
}

TEST(ConvergenceRate, InsufficientData) {
  const std::vector<double> two = {1e-1, 1e-2};
  EXPECT_THROW(convergence_rate(two), InsufficientData);
  const std::vector<double> floored = {1e-1, 1e-14, 1e-20};
  EXPECT_THROW(convergence_rate(floored), InsufficientData);

  const Manifold s = Manifold::sphere(3);
  IterationTrace t;
  t.points = {s.point(vec({1, 0, 0})), s.point(vec({0, 1, 0}))};
  t.grad_norms = {1, 1};
  t.step_norms = {1};
  EXPECT_THROW(convergence_rate(s, t, s.point(vec({0, 0, 1}))), InsufficientData);
}

TEST(ConvergenceRate, ConsistentWithPairExponents) {
  const Manifold s = Manifold::sphere(3);
  const Point p0 = s.nearest_point(vec({0.1, 0.1, 1}));
  const Point e3 = s.point(vec({0, 0, 1}));
  for (const auto& r : {RetractionSpec::exponential(), RetractionSpec::perturbed_order1()}) {
    NewtonConfig cfg;
    cfg.retraction = r;
    const IterationTrace t = newton_run(diag321(), s, cfg, p0);
    const RateReport rep = convergence_rate(s, t, e3);
    EXPECT_GE(rep.pairs_used, 2);
    EXPECT_LE(std::abs(rep.fitted_rate - mean_pair_exponent(rep)), 0.3);
  }
}

TEST(ConvergenceRate, PerturbedRetractionIsQuadratic) {
  const Manifold s = Manifold::sphere(3);
  NewtonConfig cfg;
  cfg.retraction = RetractionSpec::perturbed_order1();
  const IterationTrace t = newton_run(diag321(), s, cfg, s.nearest_point(vec({0.1, 0.1, 1})));
  const RateReport rep = convergence_rate(s, t, s.point(vec({0, 0, 1})));
  EXPECT_GE(rep.fitted_rate, 1.8);
  EXPECT_LE(rep.fitted_rate, 2.2);
}
