#pragma once

// Empirical exponent measurements. Every "A <~ |v|^k" style inequality is
// sampled over a geometric sweep of scales and summarized by a least-squares
// line in log-log coordinates.

#include <span>
#include <vector>

#include "geonewton/calculus.hpp"
#include "geonewton/manifold.hpp"
#include "geonewton/newton.hpp"

namespace geonewton {

inline constexpr double kDefaultNoiseFloor = 1e-13;

struct ScaleSweep {
  std::vector<double> scales = default_scales();  ///< strictly decreasing, positive
  std::vector<TangentVector> directions;          ///< unit tangent vectors
  double noise_floor = kDefaultNoiseFloor;

  /// 2^-2, 2^-3, ..., 2^-12.
  static std::vector<double> default_scales();
  /// Powers of two 2^-first .. 2^-last.
  static std::vector<double> dyadic_scales(int first, int last);

  void validate(const Manifold& m) const;
};

struct SlopeEstimate {
  double slope = 0.0;
  double intercept = 0.0;  ///< natural log of the implicit constant
  double r_squared = 0.0;
  int points_used = 0;
  bool saturated = false;  ///< fewer than two samples above the floor
};

/// One measurement of a sweep.
struct SweepSample {
  int direction_id = 0;
  double scale = 0.0;
  double abscissa = 0.0;  ///< x of the log-log fit (|v| or the scale)
  double value = 0.0;
};

/// Least-squares line through (log x, log y) for the points with y > floor.
/// xs must be strictly decreasing and positive.
SlopeEstimate fit_loglog(std::span<const double> xs, std::span<const double> ys, double floor);

/// Same regression without the ordering precondition, for samples pooled
/// over several directions.
SlopeEstimate fit_loglog_pooled(std::span<const double> xs, std::span<const double> ys,
                                double floor);

SlopeEstimate fit_samples(const std::vector<SweepSample>& samples, double floor);

// --- retraction order -----------------------------------------------------

/// d(R_p(s w), exp_p(s w)) for every scale s and direction w.
std::vector<SweepSample> sample_retraction_order(const Manifold& m, const RetractionSpec& r,
                                                 const Point& p, const ScaleSweep& sweep);
/// Fitted slope; the estimated order is slope - 1.
SlopeEstimate estimate_retraction_order(const Manifold& m, const RetractionSpec& r,
                                        const Point& p, const ScaleSweep& sweep);

// --- |grad J(p) + Hess J(p) v| <~ |v|^2 with R_p(v) = p* ---------------------------

/// Walks p = exp_{p*}(s w) away from the critical point p*, inverts the
/// retraction at p to get v, and records the residual against |v|.
/// Throws PreconditionError when p* is not critical.
std::vector<SweepSample> sample_lemma1_residual(const Objective& j, const Manifold& m,
                                                const RetractionSpec& r, const Point& p_star,
                                                const ScaleSweep& sweep);
SlopeEstimate lemma1_residual_slope(const Objective& j, const Manifold& m, const RetractionSpec& r,
                                    const Point& p_star, const ScaleSweep& sweep);

// --- d(R_p(v), R_p(w)) = |v - w| + O(|v|^2 + |w|^2) --------------------------------

std::vector<SweepSample> sample_lemma2_deviation(const Manifold& m, const RetractionSpec& r,
                                                 const TangentVector& v_dir,
                                                 const TangentVector& w_dir,
                                                 const ScaleSweep& sweep, int pair_id = 0);
SlopeEstimate lemma2_deviation_slope(const Manifold& m, const RetractionSpec& r, const Point& p,
                                     const TangentVector& v_dir, const TangentVector& w_dir,
                                     const ScaleSweep& sweep);

// --- cubic Taylor remainder -------------------------------------------------

std::vector<SweepSample> sample_taylor_remainder(const Objective& j, const Manifold& m,
                                                 const RetractionSpec& r, const Point& p,
                                                 const ScaleSweep& sweep);
SlopeEstimate taylor_remainder_slope(const Objective& j, const Manifold& m,
                                     const RetractionSpec& r, const Point& p,
                                     const ScaleSweep& sweep);

// --- Newton rate -------------------------------------------------------------

struct RatePair {
  double error = 0.0;  ///< e_k
  double next = 0.0;   ///< e_{k+1}
};

struct RateReport {
  std::vector<RatePair> pairs;  ///< usable pairs, both above the floor
  double fitted_rate = 0.0;     ///< slope of log e_{k+1} against log e_k
  double fitted_constant = 0.0;
  double r_squared = 0.0;
  int pairs_used = 0;
};

/// Fit from a raw error sequence e_0, e_1, .... Throws InsufficientData when
/// fewer than three errors are given or fewer than two pairs are usable.
RateReport convergence_rate(std::span<const double> errors, double floor = kDefaultNoiseFloor);

RateReport convergence_rate(const Manifold& m, const IterationTrace& trace, const Point& p_star,
                            double floor = kDefaultNoiseFloor);

/// Mean of log(e_{k+1}) / log(e_k) over the usable pairs.
double mean_pair_exponent(const RateReport& report);

}  // namespace geonewton
