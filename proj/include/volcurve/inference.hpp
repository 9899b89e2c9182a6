#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "volcurve/fit.hpp"

namespace volcurve {

struct CurveEstimate {
  std::vector<double> grid;
  std::vector<double> f_hat;
  std::vector<double> se;
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  double critical_value = 0.0;  // simultaneous band multiplier
  double tau_hat = 0.0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int n_draws = 0;
};

struct OREstimate {
  double v1 = 0.0;
  double v2 = 0.0;
  double or_hat = 1.0;
  double se_g = 0.0;
  double ci_lower = 1.0;
  double ci_upper = 1.0;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct MOREstimate {
  double mor_hat = 1.0;
  Interval ci;
  double tau_hat = 0.0;
  Interval tau_ci;
  // Wald interval on log tau from the curvature of the profile, reported as
  // a cross-check of the profile interval.
  Interval tau_wald_ci;
  bool boundary = false;
};

enum class TestKind { smooth_wald, variance_boundary_lrt };

struct TestResult {
  TestKind kind = TestKind::smooth_wald;
  double statistic = 0.0;
  double reference_df = 0.0;
  double p_value = 1.0;
};

struct CurveOptions {
  double alpha = 0.05;
  int n_draws = 10000;
  std::uint64_t seed = 1;
  bool clamp = false;
};

/// Estimate of a smooth term on `grid` with pointwise standard errors and a
/// simultaneous band from simulating the posterior of the block
/// coefficients. The band multiplier is never below the pointwise one.
CurveEstimate smooth_curve(const FittedModel& fitted, std::string_view covariate,
                           std::span<const double> grid, const CurveOptions& options = {});

/// Wald test that a smooth term is constant. Uses the rank-r pseudo-inverse
/// of the posterior covariance of the term on its training values, with
/// r = round(edf) clamped to [1, block size].
TestResult test_smooth(const FittedModel& fitted, std::string_view covariate);

/// Likelihood-ratio test of tau = 0 using the criterion of the full model
/// and of the model without random intercepts; p-value from the
/// 0.5 chi2_0 + 0.5 chi2_1 mixture. `full` may be passed to avoid refitting.
TestResult test_tau(const AssembledModel& model, const FittedModel* full = nullptr,
                    const OptimizeOptions& options = {});

/// exp(f(v1) - f(v2)) for the volume smooth with the delta-method interval
/// g +- 2 se_g. With strict_appendix_a the unrooted quadratic form is used
/// as se_g.
OREstimate odds_ratio(const FittedModel& fitted, double v1, double v2,
                      bool clamp = false, bool strict_appendix_a = false);

double median_odds_ratio(double tau);

// Upper tail of the 0.5 chi2_0 + 0.5 chi2_1 mixture; 1 at a zero statistic.
double boundary_mixture_p_value(double statistic);

/// MOR from tau_hat with an interval from profiling the criterion over the
/// provider log precision (chi2_1 cutoff).
MOREstimate mor(const AssembledModel& model, const FittedModel& fitted,
                const OptimizeOptions& options = {}, double level = 0.95);

struct ProbabilityCurve {
  std::vector<double> grid;
  std::vector<double> pi_star;
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  std::vector<double> plus_tau;
  std::vector<double> minus_tau;
  double eta_star = 0.0;
};

/// Volume effect on the probability scale for an average patient at an
/// average provider: logistic(eta_star + f(v)).
ProbabilityCurve probability_curve(const FittedModel& fitted, const CurveEstimate& curve);
ProbabilityCurve probability_curve(const FittedModel& fitted, std::span<const double> grid,
                                   const CurveOptions& options = {});

// Normal quantile and chi-square upper tail, shared with the simulation code.
double normal_quantile(double p);
double chi_square_upper(double x, double df);

}  // namespace volcurve
