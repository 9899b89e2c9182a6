#include "volcurve/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/random/normal_distribution.hpp>

#include "volcurve/error.hpp"
#include "volcurve/log.hpp"

namespace volcurve {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Dot product with a fixed summation order, shared by every code path that
// evaluates a smooth so their results agree bit for bit.
double block_value(const RowVectorXd& row, const VectorXd& coef) {
  double acc = 0.0;
  for (Index j = 0; j < row.size(); ++j) acc += row(j) * coef(j);
  return acc;
}

struct Block {
  const SmoothTerm* term;
  VectorXd coef;
  MatrixXd cov;
  double edf;
};

Block smooth_block(const FittedModel& fitted, std::string_view covariate) {
  const auto& layout = fitted.layout;
  const SmoothTerm& term = layout.smooth(covariate);
  const int k = term.basis.size();
  Block b{&term, fitted.theta().segment(term.offset, k),
          fitted.covariance.block(term.offset, term.offset, k, k), 0.0};
  for (std::size_t t = 0; t < layout.index_map.size(); ++t) {
    if (layout.index_map[t].offset == term.offset && layout.index_map[t].kind == TermKind::smooth) {
      b.edf = fitted.fit.edf.at(t);
    }
  }
  return b;
}

const SmoothTerm& volume_term(const FittedModel& fitted) {
  const int vk = fitted.layout.volume_smooth_index();
  if (vk < 0) {
    throw Error(ErrorCode::invalid_argument, "model has no volume smooth");
  }
  return fitted.layout.smooths[static_cast<std::size_t>(vk)];
}

// Square root factor L with L L^T = cov, tolerating semi-definiteness.
MatrixXd covariance_root(const MatrixXd& cov) {
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi_square_upper(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double boundary_mixture_p_value(double statistic) {
  return statistic > 0.0 ? 0.5 * chi_square_upper(statistic, 1.0) : 1.0;
}

double median_odds_ratio(double tau) {
  return std::exp(-std::numbers::sqrt2 * normal_quantile(0.75) * tau);
}

CurveEstimate smooth_curve(const FittedModel& fitted, std::string_view covariate,
                           std::span<const double> grid, const CurveOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
  }
  if (options.n_draws < 1000) {
    throw Error(ErrorCode::invalid_argument, "simultaneous band needs at least 1000 draws");
  }
  if (grid.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty evaluation grid");
  }
  const Block b = smooth_block(fitted, covariate);
  const SmoothBasis& basis = b.term->basis;
  const bool clamp = options.clamp && b.term->is_volume();
  const MatrixXd g = basis.evaluate(grid, clamp);
  const Index n = g.rows();

  CurveEstimate out;
  out.grid.assign(grid.begin(), grid.end());
  out.alpha = options.alpha;
  out.seed = options.seed;
  out.n_draws = options.n_draws;
  out.tau_hat = fitted.has_tau ? fitted.tau_hat : 0.0;
  out.f_hat.resize(n);
  out.se.resize(n);
  const MatrixXd gv = g * b.cov;
  for (Index r = 0; r < n; ++r) {
    out.f_hat[r] = block_value(g.row(r), b.coef);
    out.se[r] = std::sqrt(std::max(0.0, gv.row(r).dot(g.row(r))));
  }

  // Max-statistic over posterior draws of the block coefficients.
  std::mt19937_64 engine(options.seed);
  boost::random::normal_distribution<double> normal;
  const MatrixXd root = covariance_root(b.cov);
  MatrixXd eps(b.coef.size(), options.n_draws);
  for (Index c = 0; c < eps.cols(); ++c) {
    for (Index r = 0; r < eps.rows(); ++r) eps(r, c) = normal(engine);
  }
  const MatrixXd dev = (g * root) * eps;
  std::vector<double> maxima(options.n_draws, 0.0);
  for (Index c = 0; c < dev.cols(); ++c) {
    double m = 0.0;
    for (Index r = 0; r < n; ++r) {
      if (out.se[r] > 0.0) m = std::max(m, std::abs(dev(r, c)) / out.se[r]);
    }
    maxima[c] = m;
  }
  std::sort(maxima.begin(), maxima.end());
  const auto idx = static_cast<std::size_t>(
      std::ceil((1.0 - options.alpha) * static_cast<double>(options.n_draws))) - 1;
  const double pointwise = normal_quantile(1.0 - options.alpha / 2.0);
  out.critical_value = std::max(maxima[std::min(idx, maxima.size() - 1)], pointwise);

  out.band_lower.resize(n);
  out.band_upper.resize(n);
  for (Index r = 0; r < n; ++r) {
    out.band_lower[r] = out.f_hat[r] - out.critical_value * out.se[r];
    out.band_upper[r] = out.f_hat[r] + out.critical_value * out.se[r];
  }
  return out;
}

TestResult test_smooth(const FittedModel& fitted, std::string_view covariate) {
  const Block b = smooth_block(fitted, covariate);
  const SmoothBasis& basis = b.term->basis;
  const int k = basis.size();

  TestResult out;
  out.kind = TestKind::smooth_wald;
  if (b.edf < 0.5) {
    log::warn("smooth test: edf below 0.5 for " + std::string(covariate) + ", reporting p = 1");
    return out;
  }
  const int rank = std::clamp(static_cast<int>(std::lround(b.edf)), 1, k);
  out.reference_df = rank;

  // Gram matrix of the training rows; any R with R^T R = Gram turns the
  // covariance of f on the training points into R V R^T.
  MatrixXd gram = MatrixXd::Zero(k, k);
  RowVectorXd row(k);
  for (const auto& [value, count] : b.term->training_values) {
    basis.evaluate_row(value, true, row);
    gram.noalias() += count * row.transpose() * row;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> gram_eig(gram);
  const MatrixXd r_factor = gram_eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                            gram_eig.eigenvectors().transpose();
  const VectorXd rf = r_factor * b.coef;
  const MatrixXd v = r_factor * b.cov * r_factor.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (v + v.transpose()));
  const VectorXd& ev = eig.eigenvalues();  // ascending
  const double top = ev.maxCoeff();
  double stat = 0.0;
  for (int j = 0; j < rank; ++j) {
    const Index col = ev.size() - 1 - j;
    if (!(ev(col) > 1e-12 * top)) break;
    const double proj = eig.eigenvectors().col(col).dot(rf);
    stat += proj * proj / ev(col);
  }
  out.statistic = stat;
  out.p_value = chi_square_upper(stat, rank);
  return out;
}

TestResult test_tau(const AssembledModel& model, const FittedModel* full,
                    const OptimizeOptions& options) {
  if (!model.layout.has_provider_block()) {
    throw Error(ErrorCode::invalid_argument, "tau test needs a model with random intercepts");
  }
  FittedModel own;
  if (full == nullptr) {
    own = optimize(model, options);
    full = &own;
  }
  const AssembledModel reduced = model.without_random_intercept();
  OptimizeOptions reduced_options = options;
  reduced_options.fixed.clear();
  const FittedModel null_fit = optimize(reduced, reduced_options);
  if (!full->fit.converged || !null_fit.fit.converged) {
    throw Error(ErrorCode::not_converged, "tau test: a fit did not converge");
  }
  TestResult out;
  out.kind = TestKind::variance_boundary_lrt;
  out.reference_df = 1.0;
  out.statistic = std::max(0.0, 2.0 * (full->laml - null_fit.laml));
  out.p_value = boundary_mixture_p_value(out.statistic);
  return out;
}

OREstimate odds_ratio(const FittedModel& fitted, double v1, double v2, bool clamp,
                      bool strict_appendix_a) {
  const SmoothTerm& term = volume_term(fitted);
  const Block b = smooth_block(fitted, term.covariate);
  RowVectorXd r1(b.coef.size()), r2(b.coef.size());
  term.basis.evaluate_row(v1, clamp, r1);
  term.basis.evaluate_row(v2, clamp, r2);

  OREstimate out;
  out.v1 = v1;
  out.v2 = v2;
  out.or_hat = std::exp(block_value(r1, b.coef) - block_value(r2, b.coef));
  const RowVectorXd grad = out.or_hat * (r1 - r2);
  const double quad = std::max(0.0, (grad * b.cov * grad.transpose()).value());
  out.se_g = strict_appendix_a ? quad : std::sqrt(quad);
  out.ci_lower = std::max(0.0, out.or_hat - 2.0 * out.se_g);
  out.ci_upper = out.or_hat + 2.0 * out.se_g;
  return out;
}

MOREstimate mor(const AssembledModel& model, const FittedModel& fitted,
                const OptimizeOptions& options, double level) {
  const int pk = provider_penalty_index(model.layout);
  if (pk < 0 || !fitted.has_tau) {
    throw Error(ErrorCode::invalid_argument, "MOR needs a model with random intercepts");
  }
  const double bound = options.bound;
  const double rho_hat = fitted.log_lambdas[static_cast<std::size_t>(pk)];
  const double cutoff = 0.5 * boost::math::quantile(
                                  boost::math::chi_squared_distribution<double>(1.0), level);

  auto profile = [&](double rho) {
    OptimizeOptions o = options;
    o.fixed.assign(model.layout.penalties.size(), std::nullopt);
    o.fixed[static_cast<std::size_t>(pk)] = rho;
    return optimize(model, o).laml;
  };
  // Positive inside the interval, negative outside.
  auto excess = [&](double rho) { return cutoff - (fitted.laml - profile(rho)); };

  MOREstimate out;
  out.tau_hat = fitted.tau_hat;
  out.boundary = fitted.tau_at_boundary;
  out.mor_hat = out.boundary ? 1.0 : median_odds_ratio(out.tau_hat);

  auto find_end = [&](double direction) {
    double inside = rho_hat;
    double step = 1.0;
    double outside = std::clamp(rho_hat + direction * step, -bound, bound);
    while (excess(outside) > 0.0) {
      if (std::abs(outside) >= bound) return outside;
      inside = outside;
      step *= 2.0;
      outside = std::clamp(rho_hat + direction * step, -bound, bound);
    }
    boost::math::tools::eps_tolerance<double> tol(20);
    std::uintmax_t iters = 40;
    auto [a, b] = boost::math::tools::toms748_solve(excess, std::min(inside, outside),
                                                    std::max(inside, outside), tol, iters);
    return 0.5 * (a + b);
  };

  // Large rho is small tau; at the box bound tau is treated as zero.
  const double rho_low = find_end(-1.0);
  const double rho_high = out.boundary ? bound : find_end(+1.0);
  out.tau_ci.lower = rho_high >= bound ? 0.0 : std::exp(-0.5 * rho_high);
  out.tau_ci.upper = std::exp(-0.5 * rho_low);
  out.ci.lower = median_odds_ratio(out.tau_ci.upper);
  out.ci.upper = median_odds_ratio(out.tau_ci.lower);

  out.tau_wald_ci = {std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
  if (!out.boundary) {
    const double h = 0.25;
    const double curvature = -(profile(rho_hat + h) + profile(rho_hat - h) - 2.0 * fitted.laml) / (h * h);
    if (curvature > 0.0) {
      const double se_log_tau = 0.5 / std::sqrt(curvature);
      const double z = normal_quantile(0.5 + 0.5 * level);
      out.tau_wald_ci = {out.tau_hat * std::exp(-z * se_log_tau), out.tau_hat * std::exp(z * se_log_tau)};
    }
  }
  return out;
}

ProbabilityCurve probability_curve(const FittedModel& fitted, const CurveEstimate& curve) {
  ProbabilityCurve out;
  out.eta_star = fitted.eta_star;
  out.grid = curve.grid;
  const auto n = curve.grid.size();
  out.pi_star.resize(n);
  out.band_lower.resize(n);
  out.band_upper.resize(n);
  out.plus_tau.resize(n);
  out.minus_tau.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.pi_star[r] = logistic(out.eta_star + curve.f_hat[r]);
    out.band_lower[r] = logistic(out.eta_star + curve.band_lower[r]);
    out.band_upper[r] = logistic(out.eta_star + curve.band_upper[r]);
    out.plus_tau[r] = logistic(out.eta_star + curve.f_hat[r] + curve.tau_hat);
    out.minus_tau[r] = logistic(out.eta_star + curve.f_hat[r] - curve.tau_hat);
  }
  return out;
}

ProbabilityCurve probability_curve(const FittedModel& fitted, std::span<const double> grid,
                                   const CurveOptions& options) {
  return probability_curve(fitted, smooth_curve(fitted, volume_term(fitted).covariate, grid, options));
}

}  // namespace volcurve
