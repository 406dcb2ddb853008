#include "geonewton/convergence.hpp"

#include <algorithm>
#include <cmath>

namespace geonewton {

namespace {

constexpr double kUnitTol = 1e-10;
constexpr double kCriticalTol = 1e-10;

void require_base(const ScaleSweep& sweep, const Point& p) {
  for (const auto& w : sweep.directions) {
    if (!w.base().same_as(p)) {
      throw ContractViolation("sweep direction is not based at the measurement point");
    }
  }
}

SlopeEstimate regress(std::span<const double> xs, std::span<const double> ys, double floor) {
  if (xs.size() != ys.size()) throw ContractViolation("fit_loglog: length mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && std::isfinite(ys[i]) && ys[i] > floor) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  }
  SlopeEstimate est;
  est.points_used = static_cast<int>(lx.size());
  if (lx.size() < 2) {
    est.saturated = true;
    return est;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    // All abscissae coincide; no slope is identifiable.
    est.saturated = true;
    return est;
  }
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (est.intercept + est.slope * lx[i]);
    ss_res += r * r;
  }
  est.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return est;
}

}  // namespace

std::vector<double> ScaleSweep::default_scales() { return dyadic_scales(2, 12); }

std::vector<double> ScaleSweep::dyadic_scales(int first, int last) {
  std::vector<double> s;
  for (int k = first; k <= last; ++k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

void ScaleSweep::validate(const Manifold& m) const {
  if (scales.empty()) throw ContractViolation("sweep needs at least one scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw ContractViolation("sweep scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1])) {
      throw ContractViolation("sweep scales must be strictly decreasing");
    }
  }
  for (const auto& w : directions) {
    if (std::abs(m.norm(w) - 1.0) > kUnitTol) {
      throw ContractViolation("sweep directions must be unit vectors");
    }
  }
  if (!(noise_floor >= 0.0)) throw ContractViolation("noise floor must be nonnegative");
}

SlopeEstimate fit_loglog(std::span<const double> xs, std::span<const double> ys, double floor) {
  if (xs.size() != ys.size()) throw ContractViolation("fit_loglog: length mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) throw ContractViolation("fit_loglog: abscissae must be positive");
    if (i > 0 && !(xs[i] < xs[i - 1])) {
      throw ContractViolation("fit_loglog: abscissae must be strictly decreasing");
    }
  }
  return regress(xs, ys, floor);
}

SlopeEstimate fit_loglog_pooled(std::span<const double> xs, std::span<const double> ys,
                                double floor) {
  return regress(xs, ys, floor);
}

SlopeEstimate fit_samples(const std::vector<SweepSample>& samples, double floor) {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& s : samples) {
    xs.push_back(s.abscissa);
    ys.push_back(s.value);
  }
  return fit_loglog_pooled(xs, ys, floor);
}

// ---------------------------------------------------------------------------

std::vector<SweepSample> sample_retraction_order(const Manifold& m, const RetractionSpec& r,
                                                 const Point& p, const ScaleSweep& sweep) {
  m.check_retraction(r);
  sweep.validate(m);
  require_base(sweep, p);
  std::vector<SweepSample> out;
  for (std::size_t d = 0; d < sweep.directions.size(); ++d) {
    for (double s : sweep.scales) {
      const TangentVector v = sweep.directions[d] * s;
      out.push_back({static_cast<int>(d), s, s, m.distance(m.retract(r, v), m.exp(v))});
    }
  }
  return out;
}

SlopeEstimate estimate_retraction_order(const Manifold& m, const RetractionSpec& r,
                                        const Point& p, const ScaleSweep& sweep) {
  return fit_samples(sample_retraction_order(m, r, p, sweep), sweep.noise_floor);
}

std::vector<SweepSample> sample_lemma1_residual(const Objective& j, const Manifold& m,
                                                const RetractionSpec& r, const Point& p_star,
                                                const ScaleSweep& sweep) {
  check_objective(j, m);
  m.check_retraction(r);
  sweep.validate(m);
  require_base(sweep, p_star);
  if (m.norm(analytic_gradient(j, m, p_star)) > kCriticalTol) {
    throw PreconditionError("lemma1: p_star is not a critical point");
  }
  std::vector<SweepSample> out;
  for (std::size_t d = 0; d < sweep.directions.size(); ++d) {
    for (double s : sweep.scales) {
      const Point p = m.exp(sweep.directions[d] * s);
      const TangentVector v = m.inverse_retract(r, p, p_star);
      const GradientResult g = gradient_fd(j, m, r, p);
      const SymmetricOperator h = hessian_fd(j, m, r, p);
      const double residual = m.norm(g.vector + h.apply(m, v));
      out.push_back({static_cast<int>(d), s, m.norm(v), residual});
    }
  }
  return out;
}

SlopeEstimate lemma1_residual_slope(const Objective& j, const Manifold& m, const RetractionSpec& r,
                                    const Point& p_star, const ScaleSweep& sweep) {
  return fit_samples(sample_lemma1_residual(j, m, r, p_star, sweep), sweep.noise_floor);
}

std::vector<SweepSample> sample_lemma2_deviation(const Manifold& m, const RetractionSpec& r,
                                                 const TangentVector& v_dir,
                                                 const TangentVector& w_dir,
                                                 const ScaleSweep& sweep, int pair_id) {
  m.check_retraction(r);
  sweep.validate(m);
  const double gap = m.norm(v_dir - w_dir);
  std::vector<SweepSample> out;
  for (double s : sweep.scales) {
    const double d = m.distance(m.retract(r, v_dir * s), m.retract(r, w_dir * s));
    out.push_back({pair_id, s, s, std::abs(d - s * gap)});
  }
  return out;
}

SlopeEstimate lemma2_deviation_slope(const Manifold& m, const RetractionSpec& r, const Point& p,
                                     const TangentVector& v_dir, const TangentVector& w_dir,
                                     const ScaleSweep& sweep) {
  if (!v_dir.base().same_as(p) || !w_dir.base().same_as(p)) {
    throw ContractViolation("lemma2: directions must be based at p");
  }
  for (const auto* w : {&v_dir, &w_dir}) {
    if (std::abs(m.norm(*w) - 1.0) > kUnitTol) {
      throw ContractViolation("lemma2: directions must be unit vectors");
    }
  }
  return fit_samples(sample_lemma2_deviation(m, r, v_dir, w_dir, sweep), sweep.noise_floor);
}

std::vector<SweepSample> sample_taylor_remainder(const Objective& j, const Manifold& m,
                                                 const RetractionSpec& r, const Point& p,
                                                 const ScaleSweep& sweep) {
  check_objective(j, m);
  m.check_retraction(r);
  sweep.validate(m);
  require_base(sweep, p);
  const GradientResult g = gradient_fd(j, m, r, p);
  const SymmetricOperator h = hessian_fd(j, m, r, p);
  std::vector<SweepSample> out;
  for (std::size_t d = 0; d < sweep.directions.size(); ++d) {
    for (double s : sweep.scales) {
      const TangentVector v = sweep.directions[d] * s;
      out.push_back({static_cast<int>(d), s, s, taylor_remainder(j, m, r, g.vector, h, v)});
    }
  }
  return out;
}

SlopeEstimate taylor_remainder_slope(const Objective& j, const Manifold& m,
                                     const RetractionSpec& r, const Point& p,
                                     const ScaleSweep& sweep) {
  return fit_samples(sample_taylor_remainder(j, m, r, p, sweep), sweep.noise_floor);
}

// ---------------------------------------------------------------------------

RateReport convergence_rate(std::span<const double> errors, double floor) {
  if (errors.size() < 3) throw InsufficientData("rate fit needs at least three iterates");
  RateReport report;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] > floor && errors[k + 1] > floor && std::isfinite(errors[k]) &&
        std::isfinite(errors[k + 1])) {
      report.pairs.push_back({errors[k], errors[k + 1]});
      xs.push_back(errors[k]);
      ys.push_back(errors[k + 1]);
    }
  }
  report.pairs_used = static_cast<int>(report.pairs.size());
  if (report.pairs_used < 2) {
    throw InsufficientData("fewer than two error pairs above the noise floor");
  }
  const SlopeEstimate fit = fit_loglog_pooled(xs, ys, floor);
  if (fit.saturated) throw InsufficientData("error pairs do not determine a rate");
  report.fitted_rate = fit.slope;
  report.fitted_constant = std::exp(fit.intercept);
  report.r_squared = fit.r_squared;
  return report;
}

RateReport convergence_rate(const Manifold& m, const IterationTrace& trace, const Point& p_star,
                            double floor) {
  std::vector<double> errors;
  errors.reserve(trace.points.size());
  for (const auto& p : trace.points) errors.push_back(m.distance(p, p_star));
  return convergence_rate(errors, floor);
}

double mean_pair_exponent(const RateReport& report) {
  if (report.pairs.empty()) throw InsufficientData("no usable pairs");
  double sum = 0.0;
  for (const auto& pr : report.pairs) sum += std::log(pr.next) / std::log(pr.error);
  return sum / static_cast<double>(report.pairs.size());
}

}  // namespace geonewton
