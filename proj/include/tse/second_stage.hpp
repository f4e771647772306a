#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "tse/errors.hpp"

namespace tse {

/// Rows of `features` are phi(alpha_i)^T, `targets` holds one parameter
/// component per row, `ridge` is lambda in lambda ||beta||^2.
struct RegressionProblem {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  double ridge = 0.0;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index cols() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() < 1 || features.cols() < 1) throw DomainError("RegressionProblem: empty feature matrix");
    if (targets.size() != features.rows()) throw DomainError("RegressionProblem: targets/features row mismatch");
    if (!features.allFinite() || !targets.allFinite()) throw DomainError("RegressionProblem: non-finite entries");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw DomainError("RegressionProblem: ridge must be finite and >= 0");
  }
};

/// A fitted linear readout. `certificate` bounds objective - optimum.
struct Coefficients {
  Eigen::VectorXd beta;
  double objective = 0.0;
  double certificate = 0.0;
};

struct MaxQuadratic {
  double value = 0.0;
  Eigen::Index argmax = 0;
};

/// max_i (t_i - phi_i^T beta)^2 + lambda ||beta||^2, smallest maximizing index.
inline MaxQuadratic evaluate_max_quadratic(const Eigen::VectorXd& beta, const RegressionProblem& problem) {
  if (beta.size() != problem.cols()) throw DomainError("evaluate_max_quadratic: dimension mismatch");
  const Eigen::VectorXd residual = problem.targets - problem.features * beta;
  MaxQuadratic out{-std::numeric_limits<double>::infinity(), 0};
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double q = residual[i] * residual[i];
    if (q > out.value) {
      out.value = q;
      out.argmax = i;
    }
  }
  out.value += problem.ridge * beta.squaredNorm();
  return out;
}

/// (1/M) sum_i (t_i - phi_i^T beta)^2 + lambda ||beta||^2.
inline double ridge_objective(const Eigen::VectorXd& beta, const RegressionProblem& problem) {
  const double m = static_cast<double>(problem.rows());
  return (problem.targets - problem.features * beta).squaredNorm() / m + problem.ridge * beta.squaredNorm();
}

/// Gradient of ridge_objective.
inline Eigen::VectorXd ridge_gradient(const Eigen::VectorXd& beta, const RegressionProblem& problem) {
  const double m = static_cast<double>(problem.rows());
  return (2.0 / m) * (problem.features.transpose() * (problem.features * beta - problem.targets)) +
         2.0 * problem.ridge * beta;
}

namespace detail {

struct WeightedRidge {
  Eigen::VectorXd beta;
  double value = 0.0;  // sum_i w_i r_i^2 + lambda ||beta||^2 at beta
  bool full_rank = true;
};

// Minimizes sum_i w_i (t_i - phi_i^T beta)^2 + lambda ||beta||^2 through a
// column-pivoted QR of [sqrt(W) Phi; sqrt(lambda) I], then polishes with a
// few corrected seminormal-equation steps. Rows with w_i = 0 are skipped.
inline WeightedRidge weighted_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                                    const Eigen::VectorXd& weights, double ridge) {
  const Eigen::Index m = features.cols();
  std::vector<Eigen::Index> active;
  active.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (weights[i] > 0.0) active.push_back(i);
  }
  const auto n_active = static_cast<Eigen::Index>(active.size());
  const Eigen::Index extra = ridge > 0.0 ? m : 0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_active + extra, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_active + extra);
  for (Eigen::Index r = 0; r < n_active; ++r) {
    const double sw = std::sqrt(weights[active[static_cast<std::size_t>(r)]]);
    a.row(r) = sw * features.row(active[static_cast<std::size_t>(r)]);
    b[r] = sw * targets[active[static_cast<std::size_t>(r)]];
  }
  if (extra > 0) a.bottomRows(m).diagonal().setConstant(std::sqrt(ridge));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  WeightedRidge out;
  out.full_rank = qr.rank() == m;
  out.beta = qr.solve(b);

  if (out.full_rank) {
    const Eigen::Index k = m;
    const auto r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation();
    auto half_gradient = [&](const Eigen::VectorXd& beta) {
      return Eigen::VectorXd(a.transpose() * (a * beta - b));
    };
    Eigen::VectorXd g = half_gradient(out.beta);
    for (int step = 0; step < 3; ++step) {
      Eigen::VectorXd y = perm.transpose() * g;
      r.transpose().solveInPlace(y);
      r.solveInPlace(y);
      const Eigen::VectorXd candidate = out.beta - perm * y;
      const Eigen::VectorXd g_new = half_gradient(candidate);
      if (!(g_new.norm() < g.norm())) break;
      out.beta = candidate;
      g = g_new;
    }
  }

  double value = 0.0;
  for (Eigen::Index i : active) {
    const double res = targets[i] - features.row(i).dot(out.beta);
    value += weights[i] * res * res;
  }
  out.value = value + ridge * out.beta.squaredNorm();
  return out;
}

}  // namespace detail

/// Bayes second stage: argmin (1/M) sum_i (t_i - phi_i^T beta)^2 + lambda ||beta||^2.
inline Coefficients fit_ridge(const RegressionProblem& problem) {
  problem.validate();
  const Eigen::Index rows = problem.rows();
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(rows, 1.0 / static_cast<double>(rows));
  auto solved = detail::weighted_ridge(problem.features, problem.targets, weights, problem.ridge);
  if (!solved.full_rank) {
    throw RankDeficiencyError("fit_ridge: feature matrix is rank deficient; use a ridge term lambda > 0");
  }
  Coefficients out;
  out.beta = std::move(solved.beta);
  out.objective = ridge_objective(out.beta, problem);
  out.certificate = 0.0;
  return out;
}

struct MinimaxOptions {
  int max_iterations = 200;
};

namespace detail {

// Primal-dual interior point state for
//   min s^2 + lambda ||beta||^2  s.t.  |t_i - phi_i^T beta| <= s,
// on a problem whose columns and targets have been rescaled.
class MinimaxInteriorPoint {
 public:
  MinimaxInteriorPoint(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& ridge_diag, const Eigen::VectorXd& beta0)
      : phi_(features), t_(targets), ridge_diag_(ridge_diag), rows_(features.rows()), m_(features.cols()) {
    beta_ = beta0;
    const Eigen::VectorXd r = t_ - phi_ * beta_;
    s_ = r.cwiseAbs().maxCoeff() + std::max(1.0, r.cwiseAbs().maxCoeff());
    slack_up_ = s_ - r.array();  // s - r_i >= 0, multiplier z_up
    slack_lo_ = s_ + r.array();  // s + r_i >= 0, multiplier z_lo
    z_up_ = Eigen::ArrayXd::Constant(rows_, s_ / static_cast<double>(rows_));
    z_lo_ = z_up_;
  }

  // Residual-based duality measure slack^T z.
  double complementarity() const { return (slack_up_ * z_up_).sum() + (slack_lo_ * z_lo_).sum(); }

  double primal_infeasibility() const { return primal_residual_norm_; }
  double dual_infeasibility() const { return dual_residual_norm_; }

  const Eigen::VectorXd& beta() const { return beta_; }
  double bound() const { return s_; }

  // Simplex weights w_i proportional to the total multiplier of row i.
  Eigen::VectorXd weights() const {
    Eigen::ArrayXd w = z_up_ + z_lo_;
    const double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total)) return Eigen::VectorXd::Constant(rows_, 1.0 / rows_);
    return (w / total).matrix();
  }

  bool step() {
    // Primal residuals: constraint rows are (-phi_i, -1) x + slack_up = -t_i
    // and (phi_i, -1) x + slack_lo = t_i.
    const Eigen::ArrayXd rp_up = (-(phi_ * beta_).array() - s_) + slack_up_ + t_.array();
    const Eigen::ArrayXd rp_lo = ((phi_ * beta_).array() - s_) + slack_lo_ - t_.array();
    // Dual residual: P x + G^T z.
    const Eigen::VectorXd rd_beta = ridge_diag_.cwiseProduct(beta_) + phi_.transpose() * (z_lo_ - z_up_).matrix();
    const double rd_s = 2.0 * s_ - (z_up_.sum() + z_lo_.sum());
    primal_residual_norm_ = std::sqrt(rp_up.square().sum() + rp_lo.square().sum());
    dual_residual_norm_ = std::sqrt(rd_beta.squaredNorm() + rd_s * rd_s);

    const double k = 2.0 * static_cast<double>(rows_);
    const double mu = complementarity() / k;

    const Eigen::ArrayXd d_up = z_up_ / slack_up_;
    const Eigen::ArrayXd d_lo = z_lo_ / slack_lo_;
    const Eigen::ArrayXd d_sum = d_up + d_lo;
    const Eigen::ArrayXd d_diff = d_up - d_lo;

    Eigen::MatrixXd h(m_ + 1, m_ + 1);
    h.topLeftCorner(m_, m_).noalias() = phi_.transpose() * (phi_.array().colwise() * d_sum).matrix();
    h.topLeftCorner(m_, m_).diagonal() += ridge_diag_;
    const Eigen::VectorXd cross = phi_.transpose() * d_diff.matrix();
    h.topRightCorner(m_, 1) = cross;
    h.bottomLeftCorner(1, m_) = cross.transpose();
    h(m_, m_) = 2.0 + d_sum.sum();
    const double jitter = 1e-14 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += jitter;
    Eigen::LDLT<Eigen::MatrixXd> factor(h);
    if (factor.info() != Eigen::Success) return false;

    struct Direction {
      Eigen::VectorXd dbeta;
      double ds = 0.0;
      Eigen::ArrayXd dslack_up, dslack_lo, dz_up, dz_lo;
    };

    // Solves the reduced Newton system for complementarity targets rc.
    auto solve = [&](const Eigen::ArrayXd& rc_up, const Eigen::ArrayXd& rc_lo) {
      // v = S^{-1} (rc + Z rp)
      const Eigen::ArrayXd v_up = (rc_up + z_up_ * rp_up) / slack_up_;
      const Eigen::ArrayXd v_lo = (rc_lo + z_lo_ * rp_lo) / slack_lo_;
      Eigen::VectorXd rhs(m_ + 1);
      rhs.head(m_) = -rd_beta - phi_.transpose() * (v_lo - v_up).matrix();
      rhs[m_] = -rd_s + (v_up.sum() + v_lo.sum());
      const Eigen::VectorXd dx = factor.solve(rhs);
      Direction dir;
      dir.dbeta = dx.head(m_);
      dir.ds = dx[m_];
      const Eigen::ArrayXd gdx_up = -(phi_ * dir.dbeta).array() - dir.ds;
      const Eigen::ArrayXd gdx_lo = (phi_ * dir.dbeta).array() - dir.ds;
      dir.dslack_up = -rp_up - gdx_up;
      dir.dslack_lo = -rp_lo - gdx_lo;
      dir.dz_up = v_up + d_up * gdx_up;
      dir.dz_lo = v_lo + d_lo * gdx_lo;
      return dir;
    };

    auto max_step = [](const Eigen::ArrayXd& x, const Eigen::ArrayXd& dx) {
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
      }
      return alpha;
    };
    auto step_length = [&](const Direction& d) {
      return std::min({max_step(slack_up_, d.dslack_up), max_step(slack_lo_, d.dslack_lo),
                       max_step(z_up_, d.dz_up), max_step(z_lo_, d.dz_lo)});
    };

    const Direction affine = solve(-slack_up_ * z_up_, -slack_lo_ * z_lo_);
    const double alpha_aff = step_length(affine);
    const double mu_aff = (((slack_up_ + alpha_aff * affine.dslack_up) * (z_up_ + alpha_aff * affine.dz_up)).sum() +
                           ((slack_lo_ + alpha_aff * affine.dslack_lo) * (z_lo_ + alpha_aff * affine.dz_lo)).sum()) /
                          k;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Direction dir = solve(-slack_up_ * z_up_ - affine.dslack_up * affine.dz_up + sigma * mu,
                                -slack_lo_ * z_lo_ - affine.dslack_lo * affine.dz_lo + sigma * mu);
    const double alpha = std::min(1.0, 0.99 * step_length(dir));

    beta_ += alpha * dir.dbeta;
    s_ += alpha * dir.ds;
    slack_up_ += alpha * dir.dslack_up;
    slack_lo_ += alpha * dir.dslack_lo;
    z_up_ += alpha * dir.dz_up;
    z_lo_ += alpha * dir.dz_lo;
    return alpha > 0.0 && beta_.allFinite();
  }

 private:
  const Eigen::MatrixXd& phi_;
  const Eigen::VectorXd& t_;
  const Eigen::VectorXd& ridge_diag_;
  Eigen::Index rows_;
  Eigen::Index m_;
  Eigen::VectorXd beta_;
  double s_ = 0.0;
  Eigen::ArrayXd slack_up_, slack_lo_, z_up_, z_lo_;
  double primal_residual_norm_ = 0.0;
  double dual_residual_norm_ = 0.0;
};

}  // namespace detail

/// Worst-case-risk lower bound for simplex weights w: by weak duality
///   min_beta sum_i w_i q_i(beta) + lambda ||beta||^2 <= min_beta max_i q_i(beta) + lambda ||beta||^2.
inline double minimax_dual_bound(const RegressionProblem& problem, const Eigen::VectorXd& weights) {
  return detail::weighted_ridge(problem.features, problem.targets, weights, problem.ridge).value;
}

/// Minimax second stage: argmin max_i (t_i - phi_i^T beta)^2 + lambda ||beta||^2.
///
/// Solved as the equivalent convex QP in (beta, s) with |r_i| <= s by a
/// Mehrotra predictor-corrector interior-point method, warm-started at the
/// ridge solution. The returned certificate is objective - L(w), where L is
/// the dual bound above evaluated at the normalized interior-point
/// multipliers; it does not depend on the solver having converged.
/// Throws BudgetExceededError when the certificate stays above `tolerance`.
inline Coefficients fit_minimax(const RegressionProblem& problem, double tolerance, MinimaxOptions options = {}) {
  problem.validate();
  if (!(tolerance > 0.0)) throw DomainError("fit_minimax: tolerance must be positive");
  const Eigen::Index rows = problem.rows();
  const Eigen::Index m = problem.cols();

  // Rescale columns to unit RMS and targets to unit max magnitude.
  Eigen::VectorXd col_scale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double rms = problem.features.col(j).norm() / std::sqrt(static_cast<double>(rows));
    col_scale[j] = rms > 0.0 ? rms : 1.0;
  }
  double target_scale = problem.targets.cwiseAbs().maxCoeff();
  if (!(target_scale > 0.0)) target_scale = 1.0;

  RegressionProblem scaled;
  scaled.features = problem.features * col_scale.cwiseInverse().asDiagonal();
  scaled.targets = problem.targets / target_scale;
  const Eigen::VectorXd ridge_diag = (2.0 * problem.ridge) * col_scale.cwiseAbs2().cwiseInverse();

  auto to_original = [&](const Eigen::VectorXd& beta_scaled) {
    return Eigen::VectorXd(target_scale * beta_scaled.cwiseQuotient(col_scale));
  };
  auto scaled_dual_bound = [&](const Eigen::VectorXd& w) {
    // Dual bound of the scaled problem in original units; the ridge on the
    // scaled coefficients is lambda / c_j^2 per column.
    const Eigen::VectorXd sqrt_ridge = (0.5 * ridge_diag).cwiseSqrt();
    Eigen::MatrixXd aug_features(scaled.features.rows() + m, m);
    Eigen::VectorXd aug_targets = Eigen::VectorXd::Zero(scaled.features.rows() + m);
    Eigen::VectorXd aug_weights = Eigen::VectorXd::Zero(scaled.features.rows() + m);
    aug_features.topRows(rows) = scaled.features;
    aug_features.bottomRows(m) = sqrt_ridge.asDiagonal();
    aug_targets.head(rows) = scaled.targets;
    aug_weights.head(rows) = w;
    aug_weights.tail(m).setOnes();
    const auto solved = detail::weighted_ridge(aug_features, aug_targets, aug_weights, 0.0);
    return std::pair{target_scale * target_scale * solved.value, to_original(solved.beta)};
  };

  // Warm start at the ridge solution (falls back to zero when lambda = 0 and
  // the features are rank deficient).
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(m);
  {
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(rows, 1.0 / static_cast<double>(rows));
    beta0 = scaled_dual_bound(uniform).second.cwiseProduct(col_scale) / target_scale;
  }

  Coefficients best;
  best.beta = to_original(beta0);
  best.objective = evaluate_max_quadratic(best.beta, problem).value;
  best.certificate = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();

  auto consider = [&](const Eigen::VectorXd& beta) {
    if (!beta.allFinite()) return;
    const double value = evaluate_max_quadratic(beta, problem).value;
    if (value < best.objective) {
      best.objective = value;
      best.beta = beta;
    }
  };
  auto update_certificate = [&](const Eigen::VectorXd& weights) {
    const auto [bound, beta_w] = scaled_dual_bound(weights);
    lower_bound = std::max(lower_bound, bound);
    consider(beta_w);
    best.certificate = std::max(0.0, best.objective - lower_bound);
  };

  detail::MinimaxInteriorPoint ipm(scaled.features, scaled.targets, ridge_diag, beta0);
  const double scaled_tolerance = tolerance / (target_scale * target_scale);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (!ipm.step()) break;
    consider(to_original(ipm.beta()));
    if (ipm.complementarity() <= 0.25 * scaled_tolerance) {
      update_certificate(ipm.weights());
      if (best.certificate <= tolerance) return best;
    }
  }
  update_certificate(ipm.weights());
  if (best.certificate <= tolerance) return best;

  throw BudgetExceededError("fit_minimax: certificate " + std::to_string(best.certificate) +
                                " above tolerance " + std::to_string(tolerance),
                            std::vector<double>(best.beta.data(), best.beta.data() + best.beta.size()),
                            best.objective, best.certificate);
}

/// Absolute tolerance equal to `relative` times the objective at the ridge warm start.
inline double relative_minimax_tolerance(const RegressionProblem& problem, double relative) {
  problem.validate();
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(problem.rows(), 1.0 / static_cast<double>(problem.rows()));
  const auto start = detail::weighted_ridge(problem.features, problem.targets, uniform, problem.ridge);
  const double initial = evaluate_max_quadratic(start.beta, problem).value;
  return relative * std::max(initial, std::numeric_limits<double>::min());
}

inline double default_minimax_tolerance(const RegressionProblem& problem) {
  return relative_minimax_tolerance(problem, 1e-6);
}

inline Coefficients fit_minimax(const RegressionProblem& problem) {
  return fit_minimax(problem, default_minimax_tolerance(problem));
}

}  // namespace tse
