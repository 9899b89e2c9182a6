#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace volcurve {

enum class KnotRule { quantile, uniform };

struct SplineConfig {
  int n_basis = 10;
  int degree = 3;
  int penalty_order = 2;
  KnotRule knot_rule = KnotRule::quantile;

  // Throws Error(invalid_argument) unless n_basis > degree + 1,
  // 1 <= penalty_order < n_basis and degree >= 1.
  void validate() const;
};

// Clamped knot sequence: boundary knots replicated degree + 1 times.
struct KnotVector {
  std::vector<double> knots;
  int degree = 3;
  // Interior knots dropped because quantiles coincided.
  int collapsed = 0;

  int n_basis() const { return static_cast<int>(knots.size()) - degree - 1; }
  double lower() const { return knots.front(); }
  double upper() const { return knots.back(); }
};

struct PenaltyMatrix {
  Eigen::MatrixXd matrix;
  int rank = 0;
};

struct CenteringTransform {
  // n_basis x (n_basis - 1), orthonormal columns orthogonal to the column
  // sums of the training basis.
  Eigen::MatrixXd transform;
};

/// Knots for a covariate. Under the quantile rule the interior knots sit at
/// equally spaced quantiles of the distinct values (linear interpolation
/// between order statistics). Coinciding knots are collapsed with a warning,
/// which lowers the effective basis dimension.
KnotVector make_knots(std::span<const double> values, const SplineConfig& config);

/// B-spline design matrix via the Cox-de Boor triangular recursion. Rows sum
/// to one. Throws Error(outside_support) for x outside [lower, upper].
Eigen::MatrixXd basis_matrix(const KnotVector& knots, std::span<const double> xs);

/// Nonzero basis values at x, written into `out` (length n_basis).
void basis_row(const KnotVector& knots, double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out);

/// S = D^T D with D the order-th difference operator.
PenaltyMatrix difference_penalty(int n_basis, int order);

CenteringTransform centering_transform(const Eigen::MatrixXd& basis);

// Everything needed to evaluate one centered smooth term: knots, the
// sum-to-zero reparameterisation and the penalty in constrained coordinates.
struct SmoothBasis {
  SplineConfig config;
  KnotVector knots;
  Eigen::MatrixXd centering;  // Z
  Eigen::MatrixXd penalty;    // Z^T S Z
  int penalty_rank = 0;

  static SmoothBasis build(std::span<const double> training_values, const SplineConfig& config);

  int size() const { return static_cast<int>(centering.cols()); }
  double lower() const { return knots.lower(); }
  double upper() const { return knots.upper(); }
  bool in_support(double x) const;

  // Constrained basis row B(x) Z. Out-of-support values throw unless clamp
  // is set, in which case x is moved to the nearest boundary.
  void evaluate_row(double x, bool clamp, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const;
  Eigen::MatrixXd evaluate(std::span<const double> xs, bool clamp = false) const;
};

}  // namespace volcurve
