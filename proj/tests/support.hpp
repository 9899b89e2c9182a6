#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volcurve/design.hpp"

namespace testing {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Small clustered logistic data: x1 binary, x2 normal, provider effect and a
// mild volume effect through the caseload.
inline std::vector<volcurve::PatientRecord> small_records(unsigned seed, int n_providers = 12,
                                                          int min_n = 20, int max_n = 60,
                                                          double tau = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(min_n, max_n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  std::vector<volcurve::PatientRecord> out;
  for (int i = 0; i < n_providers; ++i) {
    const int n = size(rng);
    const double u = tau * normal(rng);
    for (int j = 0; j < n; ++j) {
      volcurve::PatientRecord r;
      r.provider_id = "H" + std::to_string(i);
      const double x1 = coin(rng) ? 1.0 : 0.0;
      const double x2 = normal(rng);
      const double eta = -1.0 + 0.4 * x1 + 0.6 * x2 + 0.01 * (n - 40) + u;
      r.outcome = std::bernoulli_distribution(logistic(eta))(rng) ? 1 : 0;
      r.covariates = {{"x1", x1}, {"x2", x2}};
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Reference penalised logistic fit by plain dense Newton on an explicit
// design, iterated until the step is at rounding level.
inline Eigen::VectorXd newton_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& S) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = logistic(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = X.transpose() * (y - mu) - S * beta;
    const Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X + S;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return beta;
}

}  // namespace testing
