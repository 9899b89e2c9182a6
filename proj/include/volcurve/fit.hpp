#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "volcurve/design.hpp"
#include "volcurve/nelder_mead.hpp"

namespace volcurve {

// X^T W X + S_lambda split at the provider block:
//   [ dense  cross ]
//   [ cross^T diag ]
// The provider block is diagonal because each record has one provider.
struct HessianBlocks {
  Eigen::MatrixXd dense;
  Eigen::MatrixXd cross;
  Eigen::VectorXd diag;

  Eigen::Index size() const { return dense.rows() + diag.size(); }
  Eigen::MatrixXd materialize() const;
};

struct PirlsOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
  int max_halvings = 30;
  // Extra Newton step after convergence.
  bool polish = true;
};

struct PenalizedFit {
  Eigen::VectorXd theta;
  HessianBlocks hessian;  // at theta
  double deviance = 0.0;
  double penalty = 0.0;  // theta^T S_lambda theta
  double log_det_hessian = 0.0;
  std::vector<double> edf;  // one per index_map entry
  double edf_total = 0.0;
  bool converged = false;
  bool separation = false;
  int iterations = 0;

  double penalized_deviance() const { return deviance + penalty; }
  double loglik() const { return -0.5 * deviance; }
  Eigen::MatrixXd penalized_hessian() const { return hessian.materialize(); }
};

/// Penalised IRLS for the Bernoulli-logit model at fixed log smoothing
/// parameters (one per entry of layout.penalties). Non-convergence is
/// reported through `converged`; a singular penalised Hessian throws
/// Error(not_identifiable).
PenalizedFit pirls(const AssembledModel& model, std::span<const double> log_lambdas,
                   const Eigen::VectorXd* init = nullptr, const PirlsOptions& options = {});

/// Laplace-approximate restricted log marginal likelihood evaluated at a
/// converged fit for the same log_lambdas.
double laml_at(const AssembledModel& model, std::span<const double> log_lambdas,
               const PenalizedFit& fit);

/// Runs pirls and evaluates the criterion. Larger is better.
double laml(const AssembledModel& model, std::span<const double> log_lambdas);

struct OptimizeOptions {
  double bound = 15.0;
  std::vector<double> grid{-5.0, 0.0, 5.0};
  // Coordinates held fixed (profile evaluation); nullopt entries are free.
  std::vector<std::optional<double>> fixed;
  NelderMeadOptions nelder_mead{.lower = -15.0, .upper = 15.0, .initial_step = 2.0,
                                .f_tolerance = 1e-4, .x_tolerance = 1e-3,
                                .max_evaluations = 200};
  PirlsOptions pirls;
};

struct FittedModel {
  ModelLayout layout;
  PenalizedFit fit;
  Eigen::MatrixXd covariance;  // H_p^{-1}
  std::vector<double> log_lambdas;
  double laml = 0.0;
  bool has_tau = false;
  double tau_hat = 0.0;
  bool tau_at_boundary = false;
  // logit of the mean fitted probability from the patient-level terms alone
  // (no volume smooth, no provider effect).
  double eta_star = 0.0;
  long n_obs = 0;
  int evaluations = 0;

  const Eigen::VectorXd& theta() const { return fit.theta; }
};

/// Maximises the criterion over log smoothing parameters in the box
/// [-bound, bound]: grid start, then Nelder-Mead with one restart.
FittedModel optimize(const AssembledModel& model, const OptimizeOptions& options = {});

/// Fit at given log smoothing parameters, no outer search.
FittedModel fit_fixed(const AssembledModel& model, std::span<const double> log_lambdas,
                      const PirlsOptions& options = {});

Eigen::VectorXd predict_eta(const FittedModel& fitted, const Eigen::MatrixXd& rows);

/// Index into layout.penalties of the provider block, or -1.
int provider_penalty_index(const ModelLayout& layout);

}  // namespace volcurve
