#include "volcurve/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "volcurve/error.hpp"
#include "volcurve/log.hpp"

namespace volcurve {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kProbFloor = 1e-10;
// Linear predictors beyond this magnitude mean fitted probabilities that
// are numerically 0 or 1: the data are (quasi-)separated.
constexpr double kSeparationEta = 20.0;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Factorisation of the block system through the Schur complement of the
// diagonal provider block. The Schur complement is Jacobi-scaled before the
// Cholesky so the singularity check is scale free.
class BlockFactor {
 public:
  explicit BlockFactor(const HessianBlocks& h) : q_(h.dense.rows()), m_(h.diag.size()) {
    if (m_ > 0) {
      if ((h.diag.array() <= 0.0).any()) fail();
      inv_diag_ = h.diag.cwiseInverse();
      cross_scaled_ = h.cross * inv_diag_.asDiagonal();  // B D^{-1}
      schur_ = h.dense - cross_scaled_ * h.cross.transpose();
    } else {
      schur_ = h.dense;
    }
    if (q_ > 0) {
      scale_ = schur_.diagonal();
      if ((scale_.array() <= 0.0).any()) fail();
      scale_ = scale_.cwiseSqrt().cwiseInverse();
      const MatrixXd scaled = scale_.asDiagonal() * schur_ * scale_.asDiagonal();
      llt_.compute(scaled);
      if (llt_.info() != Eigen::Success) fail();
      const VectorXd piv = llt_.matrixLLT().diagonal();
      if (piv.minCoeff() * piv.minCoeff() < 1e-13) fail();
      log_det_ = 2.0 * piv.array().log().sum() - 2.0 * scale_.array().log().sum();
    }
    if (m_ > 0) log_det_ += h.diag.array().log().sum();
  }

  double log_det() const { return log_det_; }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd out(q_ + m_);
    VectorXd rf = rhs.head(q_);
    if (m_ > 0) rf -= cross_scaled_ * rhs.tail(m_);
    const VectorXd tf = solve_schur(rf);
    out.head(q_) = tf;
    if (m_ > 0) {
      out.tail(m_) = inv_diag_.cwiseProduct(rhs.tail(m_)) - cross_scaled_.transpose() * tf;
    }
    return out;
  }

  MatrixXd dense_inverse() const {
    return solve_schur(MatrixXd::Identity(q_, q_));
  }

  // Diagonal of the provider block of the inverse.
  VectorXd provider_inverse_diag(const MatrixXd& dense_inv) const {
    if (m_ == 0) return {};
    const MatrixXd m = dense_inv * cross_scaled_;
    return inv_diag_ + (cross_scaled_.cwiseProduct(m)).colwise().sum().transpose();
  }

  MatrixXd inverse() const {
    const MatrixXd sff = dense_inverse();
    MatrixXd out(q_ + m_, q_ + m_);
    out.topLeftCorner(q_, q_) = sff;
    if (m_ > 0) {
      const MatrixXd sfu = -sff * cross_scaled_;
      out.topRightCorner(q_, m_) = sfu;
      out.bottomLeftCorner(m_, q_) = sfu.transpose();
      MatrixXd suu = -cross_scaled_.transpose() * sfu;
      suu.diagonal() += inv_diag_;
      out.bottomRightCorner(m_, m_) = suu;
    }
    return out;
  }

 private:
  [[noreturn]] static void fail() {
    throw Error(ErrorCode::not_identifiable, "model not identifiable: penalized Hessian is singular");
  }

  template <typename Rhs>
  MatrixXd solve_schur(const Rhs& rhs) const {
    if (q_ == 0) return MatrixXd(0, rhs.cols());
    MatrixXd scaled = scale_.asDiagonal() * rhs;
    llt_.solveInPlace(scaled);
    return scale_.asDiagonal() * scaled;
  }

  Index q_;
  Index m_;
  VectorXd inv_diag_;
  MatrixXd cross_scaled_;
  MatrixXd schur_;
  VectorXd scale_;
  Eigen::LLT<MatrixXd> llt_;
  double log_det_ = 0.0;
};

struct Lambdas {
  MatrixXd dense_penalty;  // sum_k lambda_k S_k embedded in the dense block
  double provider = 0.0;
};

Lambdas penalty_for(const ModelLayout& layout, std::span<const double> log_lambdas) {
  if (log_lambdas.size() != layout.penalties.size()) {
    throw Error(ErrorCode::invalid_argument, "expected one log smoothing parameter per penalty");
  }
  Lambdas out;
  out.dense_penalty = MatrixXd::Zero(layout.n_dense, layout.n_dense);
  for (std::size_t k = 0; k < layout.penalties.size(); ++k) {
    const auto& pb = layout.penalties[k];
    if (!std::isfinite(log_lambdas[k])) {
      throw Error(ErrorCode::invalid_argument, "log smoothing parameters must be finite");
    }
    const double lambda = std::exp(log_lambdas[k]);
    if (pb.provider) {
      out.provider = lambda;
    } else {
      out.dense_penalty.block(pb.offset, pb.offset, pb.size, pb.size) += lambda * pb.matrix;
    }
  }
  return out;
}

VectorXd linear_predictor(const AssembledModel& model, const VectorXd& theta) {
  VectorXd eta = model.dense * theta.head(model.layout.n_dense);
  if (!model.provider_column.empty()) {
    const auto tail = theta.tail(model.n_providers());
    for (Index i = 0; i < eta.size(); ++i) eta(i) += tail(model.provider_column[i]);
  }
  return eta;
}

double deviance_of(const VectorXd& y, const VectorXd& eta) {
  double dev = 0.0;
  for (Index i = 0; i < eta.size(); ++i) dev += softplus(eta(i)) - y(i) * eta(i);
  return 2.0 * dev;
}

double penalty_of(const Lambdas& lambdas, const ModelLayout& layout, const VectorXd& theta) {
  const auto tf = theta.head(layout.n_dense);
  double pen = tf.dot(lambdas.dense_penalty * tf);
  if (layout.has_provider_block()) {
    pen += lambdas.provider * theta.tail(layout.n_cols - layout.n_dense).squaredNorm();
  }
  return pen;
}

// Weighted cross products X^T W X (+ penalty) and X^T W z.
struct WeightedSystem {
  HessianBlocks blocks;
  VectorXd rhs;
};

WeightedSystem weighted_system(const AssembledModel& model, const Lambdas& lambdas,
                               const VectorXd& w, const VectorXd& wz) {
  const Index q = model.layout.n_dense;
  const int m = model.layout.has_provider_block() ? model.n_providers() : 0;
  WeightedSystem ws;
  auto& h = ws.blocks;

  const MatrixXd root_w = model.dense.array().colwise() * w.array().sqrt();
  h.dense = MatrixXd::Zero(q, q);
  h.dense.selfadjointView<Eigen::Lower>().rankUpdate(root_w.transpose());
  h.dense = h.dense.selfadjointView<Eigen::Lower>();
  h.dense += lambdas.dense_penalty;

  ws.rhs.resize(q + m);
  ws.rhs.head(q) = model.dense.transpose() * wz;
  h.cross = MatrixXd::Zero(q, m);
  h.diag = VectorXd::Constant(m, lambdas.provider);
  if (m > 0) {
    ws.rhs.tail(m).setZero();
    const auto& pc = model.provider_column;
    for (Index i = 0; i < w.size(); ++i) {
      h.diag(pc[i]) += w(i);
      ws.rhs(q + pc[i]) += wz(i);
    }
    for (Index c = 0; c < q; ++c) {
      const auto col = model.dense.col(c);
      for (Index i = 0; i < w.size(); ++i) h.cross(c, pc[i]) += w(i) * col(i);
    }
  }
  return ws;
}

void irls_weights(const VectorXd& y, const VectorXd& eta, VectorXd& w, VectorXd& wz) {
  w.resize(eta.size());
  wz.resize(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    const double mu = std::clamp(logistic(eta(i)), kProbFloor, 1.0 - kProbFloor);
    const double wi = mu * (1.0 - mu);
    w(i) = wi;
    wz(i) = wi * eta(i) + (y(i) - mu);
  }
}

// Effective degrees of freedom per index_map term: trace of the matching
// diagonal block of H^{-1} X^T W X = I - H^{-1} S_lambda.
void compute_edf(const ModelLayout& layout, std::span<const double> log_lambdas,
                 const BlockFactor& factor, PenalizedFit& fit) {
  const MatrixXd dense_inv = factor.dense_inverse();
  fit.edf.assign(layout.index_map.size(), 0.0);
  for (std::size_t t = 0; t < layout.index_map.size(); ++t) {
    const auto& term = layout.index_map[t];
    double edf = term.size;
    for (std::size_t k = 0; k < layout.penalties.size(); ++k) {
      const auto& pb = layout.penalties[k];
      if (pb.offset != term.offset) continue;
      const double lambda = std::exp(log_lambdas[k]);
      if (pb.provider) {
        edf -= lambda * factor.provider_inverse_diag(dense_inv).sum();
      } else {
        edf -= lambda * (dense_inv.block(pb.offset, pb.offset, pb.size, pb.size) * pb.matrix).trace();
      }
    }
    fit.edf[t] = edf;
  }
  fit.edf_total = 0.0;
  for (double e : fit.edf) fit.edf_total += e;
}

}  // namespace

MatrixXd HessianBlocks::materialize() const {
  const Index q = dense.rows();
  const Index m = diag.size();
  MatrixXd h = MatrixXd::Zero(q + m, q + m);
  h.topLeftCorner(q, q) = dense;
  if (m > 0) {
    h.topRightCorner(q, m) = cross;
    h.bottomLeftCorner(m, q) = cross.transpose();
    h.bottomRightCorner(m, m).diagonal() = diag;
  }
  return h;
}

int provider_penalty_index(const ModelLayout& layout) {
  for (std::size_t k = 0; k < layout.penalties.size(); ++k) {
    if (layout.penalties[k].provider) return static_cast<int>(k);
  }
  return -1;
}

PenalizedFit pirls(const AssembledModel& model, std::span<const double> log_lambdas,
                   const VectorXd* init, const PirlsOptions& options) {
  const auto& layout = model.layout;
  const Lambdas lambdas = penalty_for(layout, log_lambdas);
  const VectorXd& y = model.y;

  PenalizedFit fit;
  VectorXd theta;
  VectorXd eta;
  double pen_dev = std::numeric_limits<double>::infinity();
  if (init != nullptr) {
    if (init->size() != layout.n_cols) {
      throw Error(ErrorCode::invalid_argument, "initial coefficient vector has the wrong length");
    }
    theta = *init;
    eta = linear_predictor(model, theta);
    pen_dev = deviance_of(y, eta) + penalty_of(lambdas, layout, theta);
  } else {
    eta = y.unaryExpr([](double v) {
      const double mu = (v + 0.5) / 2.0;
      return std::log(mu / (1.0 - mu));
    });
  }

  VectorXd w, wz;
  for (fit.iterations = 1; fit.iterations <= options.max_iterations; ++fit.iterations) {
    irls_weights(y, eta, w, wz);
    const WeightedSystem ws = weighted_system(model, lambdas, w, wz);
    const BlockFactor factor(ws.blocks);
    VectorXd proposal = factor.solve(ws.rhs);
    VectorXd eta_new = linear_predictor(model, proposal);
    double pen_dev_new = deviance_of(y, eta_new) + penalty_of(lambdas, layout, proposal);

    if (theta.size() > 0) {
      int halvings = 0;
      while (!(pen_dev_new <= pen_dev) && halvings < options.max_halvings) {
        proposal = 0.5 * (proposal + theta);
        eta_new = linear_predictor(model, proposal);
        pen_dev_new = deviance_of(y, eta_new) + penalty_of(lambdas, layout, proposal);
        ++halvings;
      }
      if (!(pen_dev_new <= pen_dev)) {
        // No descent direction left at working precision.
        fit.converged = std::abs(pen_dev_new - pen_dev) / (std::abs(pen_dev) + 0.1) < options.tolerance;
        break;
      }
    }
    const double change = std::abs(pen_dev_new - pen_dev) / (std::abs(pen_dev_new) + 0.1);
    theta = std::move(proposal);
    eta = std::move(eta_new);
    pen_dev = pen_dev_new;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, options.max_iterations);

  // The stopping rule looks at the objective, which is flat near the optimum;
  // one more full Newton step brings the coefficients to rounding level.
  if (fit.converged && options.polish) {
    irls_weights(y, eta, w, wz);
    const WeightedSystem ws = weighted_system(model, lambdas, w, wz);
    VectorXd proposal = BlockFactor(ws.blocks).solve(ws.rhs);
    VectorXd eta_new = linear_predictor(model, proposal);
    const double pen_dev_new = deviance_of(y, eta_new) + penalty_of(lambdas, layout, proposal);
    if (pen_dev_new <= pen_dev + 1e-10 * (std::abs(pen_dev) + 0.1)) {
      theta = std::move(proposal);
      eta = std::move(eta_new);
    }
  }

  fit.theta = theta;
  fit.deviance = deviance_of(y, eta);
  fit.penalty = penalty_of(lambdas, layout, theta);
  if (eta.size() > 0 && eta.cwiseAbs().maxCoeff() > kSeparationEta) {
    fit.separation = true;
    fit.converged = false;
    log::debug("pirls: fitted probabilities at 0 or 1, data appear separated");
  }

  // Hessian, log determinant and edf at the final coefficients.
  irls_weights(y, eta, w, wz);
  WeightedSystem ws = weighted_system(model, lambdas, w, wz);
  const BlockFactor factor(ws.blocks);
  fit.log_det_hessian = factor.log_det();
  compute_edf(layout, log_lambdas, factor, fit);
  fit.hessian = std::move(ws.blocks);
  return fit;
}

double laml_at(const AssembledModel& model, std::span<const double> log_lambdas,
               const PenalizedFit& fit) {
  const auto& layout = model.layout;
  double log_det_s = 0.0;
  int rank_total = 0;
  for (std::size_t k = 0; k < layout.penalties.size(); ++k) {
    const auto& pb = layout.penalties[k];
    rank_total += pb.rank;
    log_det_s += pb.rank * log_lambdas[k];
    if (!pb.provider) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pb.matrix, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      // Largest `rank` eigenvalues are the positive ones.
      for (Index j = ev.size() - pb.rank; j < ev.size(); ++j) log_det_s += std::log(ev(j));
    }
  }
  const int null_dim = layout.n_cols - rank_total;
  const double lp = fit.loglik() - 0.5 * fit.penalty;
  return lp + 0.5 * log_det_s - 0.5 * fit.log_det_hessian +
         0.5 * null_dim * std::log(2.0 * std::numbers::pi);
}

double laml(const AssembledModel& model, std::span<const double> log_lambdas) {
  const PenalizedFit fit = pirls(model, log_lambdas);
  if (!fit.converged) {
    throw Error(ErrorCode::not_converged, "penalized IRLS did not converge");
  }
  return laml_at(model, log_lambdas, fit);
}

namespace {

FittedModel finish(const AssembledModel& model, std::vector<double> log_lambdas,
                   PenalizedFit fit, double criterion, double bound) {
  const auto& layout = model.layout;
  FittedModel out;
  out.layout = layout;
  out.log_lambdas = std::move(log_lambdas);
  out.laml = criterion;
  out.n_obs = static_cast<long>(model.n_obs());
  out.covariance = BlockFactor(fit.hessian).inverse();
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();

  const int pk = provider_penalty_index(layout);
  if (pk >= 0) {
    out.has_tau = true;
    const double rho = out.log_lambdas[static_cast<std::size_t>(pk)];
    out.tau_hat = std::exp(-0.5 * rho);
    out.tau_at_boundary = rho >= bound - 1e-3;
  }

  // Average-patient linear predictor: every dense column except the volume
  // smooth, provider effects left out.
  VectorXd theta_patient = fit.theta.head(layout.n_dense);
  const int vk = layout.volume_smooth_index();
  if (vk >= 0) {
    const auto& s = layout.smooths[static_cast<std::size_t>(vk)];
    theta_patient.segment(s.offset, s.basis.size()).setZero();
  }
  const VectorXd eta = model.dense * theta_patient;
  double mean_prob = 0.0;
  for (Index i = 0; i < eta.size(); ++i) mean_prob += logistic(eta(i));
  mean_prob /= static_cast<double>(eta.size());
  out.eta_star = std::log(mean_prob / (1.0 - mean_prob));

  out.fit = std::move(fit);
  return out;
}

}  // namespace

FittedModel fit_fixed(const AssembledModel& model, std::span<const double> log_lambdas,
                      const PirlsOptions& options) {
  PenalizedFit fit = pirls(model, log_lambdas, nullptr, options);
  const double criterion = laml_at(model, log_lambdas, fit);
  return finish(model, {log_lambdas.begin(), log_lambdas.end()}, std::move(fit), criterion,
                std::numeric_limits<double>::infinity());
}

FittedModel optimize(const AssembledModel& model, const OptimizeOptions& options) {
  const auto& layout = model.layout;
  const std::size_t d = layout.penalties.size();
  if (d == 0) {
    FittedModel out = fit_fixed(model, {}, options.pirls);
    if (!out.fit.converged) {
      throw Error(ErrorCode::not_converged, "penalized IRLS did not converge");
    }
    return out;
  }
  if (!options.fixed.empty() && options.fixed.size() != d) {
    throw Error(ErrorCode::invalid_argument, "fixed coordinates must match the penalty count");
  }

  std::vector<std::size_t> free;
  std::vector<double> full(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    if (!options.fixed.empty() && options.fixed[k].has_value()) {
      full[k] = std::clamp(*options.fixed[k], -options.bound, options.bound);
    } else {
      free.push_back(k);
    }
  }

  // Best converged fit so far; its coefficients warm-start the next PIRLS.
  struct Best {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> rho;
    std::optional<PenalizedFit> fit;
  } best;
  VectorXd warm;
  int evaluations = 0;
  int failures = 0;
  int unidentifiable = 0;
  std::string last_error;

  auto evaluate = [&](const std::vector<double>& free_rho) {
    std::vector<double> rho = full;
    for (std::size_t j = 0; j < free.size(); ++j) {
      rho[free[j]] = std::clamp(free_rho[j], -options.bound, options.bound);
    }
    ++evaluations;
    try {
      PenalizedFit fit = pirls(model, rho, warm.size() > 0 ? &warm : nullptr, options.pirls);
      if (!fit.converged) {
        ++failures;
        last_error = fit.separation ? "separation" : "pirls did not converge";
        return -std::numeric_limits<double>::infinity();
      }
      const double value = laml_at(model, rho, fit);
      warm = fit.theta;
      if (value > best.value) {
        best.value = value;
        best.rho = rho;
        best.fit = std::move(fit);
      }
      return value;
    } catch (const Error& e) {
      ++failures;
      if (e.code() == ErrorCode::not_identifiable) ++unidentifiable;
      last_error = e.what();
      return -std::numeric_limits<double>::infinity();
    }
  };

  // Coarse grid over the free coordinates.
  const std::size_t g = options.grid.size();
  std::size_t grid_points = 1;
  for (std::size_t j = 0; j < free.size(); ++j) grid_points *= g;
  std::vector<double> start(free.size(), 0.0);
  double start_value = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < grid_points; ++idx) {
    std::vector<double> point(free.size());
    std::size_t rest = idx;
    for (std::size_t j = 0; j < free.size(); ++j) {
      point[j] = options.grid[rest % g];
      rest /= g;
    }
    const double v = evaluate(point);
    if (v > start_value) {
      start_value = v;
      start = point;
    }
  }

  if (!free.empty() && std::isfinite(start_value)) {
    NelderMeadOptions nm = options.nelder_mead;
    nm.lower = -options.bound;
    nm.upper = options.bound;
    auto objective = [&](const std::vector<double>& x) { return -evaluate(x); };
    NelderMeadResult run = nelder_mead(objective, start, nm);
    nm.initial_step = std::max(nm.x_tolerance * 10.0, 0.25 * nm.initial_step);
    nelder_mead(objective, run.x, nm);
  }

  if (!best.fit) {
    std::ostringstream msg;
    msg << "smoothing parameter search failed at all " << evaluations << " evaluations";
    if (!last_error.empty()) msg << " (last: " << last_error << ")";
    if (unidentifiable == failures && failures > 0) {
      throw Error(ErrorCode::not_identifiable, msg.str());
    }
    throw Error(ErrorCode::not_converged, msg.str());
  }
  FittedModel out = finish(model, best.rho, std::move(*best.fit), best.value, options.bound);
  out.evaluations = evaluations;
  return out;
}

VectorXd predict_eta(const FittedModel& fitted, const MatrixXd& rows) {
  if (rows.cols() != fitted.theta().size()) {
    throw Error(ErrorCode::invalid_argument, "design rows have " + std::to_string(rows.cols()) +
                                                 " columns, model has " +
                                                 std::to_string(fitted.theta().size()));
  }
  return rows * fitted.theta();
}

}  // namespace volcurve
