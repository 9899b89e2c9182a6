#include "volcurve/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "volcurve/error.hpp"
#include "volcurve/log.hpp"

namespace volcurve {

namespace {

// Relative slack for boundary comparisons, so that a value recomputed from
// the same data does not fall a rounding error outside the support.
constexpr double kSupportSlack = 1e-10;

// Type-7 quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Index i of the knot span with knots[i] <= x < knots[i+1]; the right
// boundary belongs to the last non-degenerate span.
int find_span(const KnotVector& kv, double x) {
  const int n = kv.n_basis();
  const auto& t = kv.knots;
  if (x >= t[n]) return n - 1;
  auto it = std::upper_bound(t.begin() + kv.degree, t.begin() + n + 1, x);
  return static_cast<int>(it - t.begin()) - 1;
}

}  // namespace

void SplineConfig::validate() const {
  if (degree < 1) {
    throw Error(ErrorCode::invalid_argument, "spline degree must be at least 1");
  }
  if (n_basis <= degree + 1) {
    throw Error(ErrorCode::invalid_argument, "n_basis must exceed degree + 1");
  }
  if (penalty_order < 1 || penalty_order >= n_basis) {
    throw Error(ErrorCode::invalid_argument, "penalty_order must lie in [1, n_basis)");
  }
}

KnotVector make_knots(std::span<const double> values, const SplineConfig& config) {
  config.validate();
  if (values.empty()) {
    throw Error(ErrorCode::invalid_argument, "no values to place knots on");
  }
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::no_spread, "no spread in covariate");
  }
  const double lo = distinct.front();
  const double hi = distinct.back();
  const int n_interior = config.n_basis - config.degree - 1;

  std::vector<double> interior;
  interior.reserve(n_interior);
  for (int j = 1; j <= n_interior; ++j) {
    const double prob = static_cast<double>(j) / (n_interior + 1);
    interior.push_back(config.knot_rule == KnotRule::quantile
                           ? quantile_sorted(distinct, prob)
                           : lo + prob * (hi - lo));
  }
  const auto before = interior.size();
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  std::erase_if(interior, [&](double k) { return k <= lo || k >= hi; });

  KnotVector kv;
  kv.degree = config.degree;
  kv.collapsed = static_cast<int>(before - interior.size());
  if (kv.collapsed > 0) {
    std::ostringstream msg;
    msg << "collapsed " << kv.collapsed << " duplicate interior knot(s); basis reduced to "
        << config.n_basis - kv.collapsed << " functions";
    log::warn(msg.str());
  }
  kv.knots.assign(config.degree + 1, lo);
  kv.knots.insert(kv.knots.end(), interior.begin(), interior.end());
  kv.knots.insert(kv.knots.end(), config.degree + 1, hi);
  return kv;
}

void basis_row(const KnotVector& kv, double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const double lo = kv.lower();
  const double hi = kv.upper();
  const double slack = kSupportSlack * (hi - lo);
  if (!(x >= lo - slack && x <= hi + slack)) {
    std::ostringstream msg;
    msg << "volume outside basis support: " << x << " not in [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::outside_support, msg.str());
  }
  x = std::clamp(x, lo, hi);

  const int p = kv.degree;
  const auto& t = kv.knots;
  const int span = find_span(kv, x);

  // Nonzero functions N_{span-p..span}, built up degree by degree.
  std::vector<double> vals(p + 1, 0.0), left(p + 1), right(p + 1);
  vals[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom > 0.0 ? vals[r] / denom : 0.0;
      vals[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[j] = saved;
  }
  out.setZero();
  for (int r = 0; r <= p; ++r) out(span - p + r) = vals[r];
}

Eigen::MatrixXd basis_matrix(const KnotVector& knots, std::span<const double> xs) {
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(xs.size()), knots.n_basis());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    basis_row(knots, xs[r], basis.row(static_cast<Eigen::Index>(r)));
  }
  return basis;
}

PenaltyMatrix difference_penalty(int n_basis, int order) {
  if (order < 1 || order >= n_basis) {
    throw Error(ErrorCode::invalid_argument, "difference order must lie in [1, n_basis)");
  }
  Eigen::MatrixXd diff = Eigen::MatrixXd::Identity(n_basis, n_basis);
  for (int k = 0; k < order; ++k) {
    const auto rows = diff.rows() - 1;
    diff = (diff.bottomRows(rows) - diff.topRows(rows)).eval();
  }
  return {diff.transpose() * diff, n_basis - order};
}

CenteringTransform centering_transform(const Eigen::MatrixXd& basis) {
  if (basis.rows() < 2 || basis.cols() < 2) {
    throw Error(ErrorCode::invalid_argument, "centering needs at least two rows and two columns");
  }
  const Eigen::VectorXd sums = basis.colwise().sum().transpose();
  // Householder Q of the column-sum vector; its trailing columns span the
  // orthogonal complement.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sums);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(sums.size(), sums.size());
  return {q.rightCols(sums.size() - 1)};
}

SmoothBasis SmoothBasis::build(std::span<const double> training_values, const SplineConfig& config) {
  SmoothBasis sb;
  sb.config = config;
  sb.knots = make_knots(training_values, config);
  const Eigen::MatrixXd basis = basis_matrix(sb.knots, training_values);
  sb.centering = centering_transform(basis).transform;
  const int n = sb.knots.n_basis();
  const int order = std::min(config.penalty_order, n - 1);
  const PenaltyMatrix s = difference_penalty(n, order);
  sb.penalty = sb.centering.transpose() * s.matrix * sb.centering;
  sb.penalty = (0.5 * (sb.penalty + sb.penalty.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sb.penalty, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  sb.penalty_rank = static_cast<int>((eig.eigenvalues().array() > 1e-9 * top).count());
  return sb;
}

bool SmoothBasis::in_support(double x) const {
  const double slack = kSupportSlack * (upper() - lower());
  return x >= lower() - slack && x <= upper() + slack;
}

void SmoothBasis::evaluate_row(double x, bool clamp, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
  if (clamp) x = std::clamp(x, lower(), upper());
  Eigen::RowVectorXd raw(knots.n_basis());
  basis_row(knots, x, raw);
  // Explicit loop so that every caller gets bitwise identical rows.
  const auto k = centering.rows();
  for (Eigen::Index c = 0; c < centering.cols(); ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) acc += raw(r) * centering(r, c);
    out(c) = acc;
  }
}

Eigen::MatrixXd SmoothBasis::evaluate(std::span<const double> xs, bool clamp) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    evaluate_row(xs[r], clamp, out.row(static_cast<Eigen::Index>(r)));
  }
  return out;
}

}  // namespace volcurve
