#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "tse/errors.hpp"
#include "tse/random.hpp"
#include "tse/sim_models.hpp"

namespace tse {

inline constexpr double kEulerMascheroni = 0.57721566490153286060651209008240243;

/// Per-observation Fisher information of the Weibull model in (eta, gamma).
struct FisherMatrix {
  Eigen::Matrix2d entries = Eigen::Matrix2d::Zero();

  double eta_eta() const { return entries(0, 0); }
  double eta_gamma() const { return entries(0, 1); }
  double gamma_gamma() const { return entries(1, 1); }
};

inline FisherMatrix fisher_per_sample(const WeibullParams& params) {
  const double eta = params.scale();
  const double gamma = params.shape();
  const double one_minus_euler = 1.0 - kEulerMascheroni;
  FisherMatrix f;
  f.entries(0, 0) = gamma * gamma / (eta * eta);
  f.entries(0, 1) = f.entries(1, 0) = -one_minus_euler / eta;
  f.entries(1, 1) = (std::numbers::pi * std::numbers::pi / 6.0 + one_minus_euler * one_minus_euler) / (gamma * gamma);
  return f;
}

struct CrlbBounds {
  double eta = 0.0;
  double gamma = 0.0;
};

/// Diagonal of (N I(theta))^{-1}: variance floors for unbiased estimators
/// of eta and gamma from N observations.
inline CrlbBounds crlb(const WeibullParams& params, std::size_t n_obs) {
  if (n_obs < 1) throw DomainError("crlb: n_obs must be >= 1");
  const Eigen::Matrix2d info = fisher_per_sample(params).entries;
  const double det = info.determinant();
  if (!(det > 0.0)) throw std::logic_error("crlb: singular Fisher information");
  const double n = static_cast<double>(n_obs);
  return CrlbBounds{info(1, 1) / (det * n), info(0, 0) / (det * n)};
}

/// Analytic score (d/d eta, d/d gamma) of log f(x; eta, gamma).
inline Eigen::Vector2d weibull_score(double x, const WeibullParams& params) {
  const double eta = params.scale();
  const double gamma = params.shape();
  const double log_z = std::log(x / eta);
  const double z_pow = std::exp(gamma * log_z);
  return {(gamma / eta) * (z_pow - 1.0), 1.0 / gamma + log_z * (1.0 - z_pow)};
}

struct FisherOracleResult {
  FisherMatrix matrix;
  Eigen::Vector2d mean_score = Eigen::Vector2d::Zero();
  Eigen::Matrix2d standard_error = Eigen::Matrix2d::Zero();  // i.i.d. formula, conservative here
  Eigen::Vector2d score_standard_error = Eigen::Vector2d::Zero();
};

/// Monte-Carlo estimate of E[score score^T] from n_draws observations.
/// Draw k is the Weibull quantile of a uniform variate placed in stratum
/// [k/n, (k+1)/n), which keeps the estimator unbiased while cutting the
/// variance of the heavy-tailed cross term.
inline FisherOracleResult fisher_oracle_detailed(const WeibullParams& params, std::size_t n_draws,
                                                 const SeedSpec& seed) {
  if (n_draws < 2) throw DomainError("fisher_oracle: need at least two draws");
  RandomStream stream(seed);
  const double n = static_cast<double>(n_draws);
  Eigen::Vector2d sum_score = Eigen::Vector2d::Zero();
  Eigen::Vector2d sum_score_sq = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sum_outer = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d sum_outer_sq = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < n_draws; ++k) {
    const double u = (static_cast<double>(k) + stream.uniform()) / n;
    const double x = weibull_quantile(u < 1.0 ? u : std::nextafter(1.0, 0.0), params);
    if (!(x > 0.0)) continue;  // u == 0 exactly; probability 2^-53 per draw
    const Eigen::Vector2d s = weibull_score(x, params);
    const Eigen::Matrix2d outer = s * s.transpose();
    sum_score += s;
    sum_score_sq += s.cwiseAbs2();
    sum_outer += outer;
    sum_outer_sq += outer.cwiseAbs2();
  }
  FisherOracleResult r;
  r.matrix.entries = sum_outer / n;
  r.mean_score = sum_score / n;
  r.standard_error = ((sum_outer_sq / n - r.matrix.entries.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0).cwiseSqrt();
  r.score_standard_error = ((sum_score_sq / n - r.mean_score.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0).cwiseSqrt();
  return r;
}

inline FisherMatrix fisher_oracle(const WeibullParams& params, std::size_t n_draws, const SeedSpec& seed) {
  if (n_draws < 100'000) throw DomainError("fisher_oracle: n_draws must be >= 1e5");
  return fisher_oracle_detailed(params, n_draws, seed).matrix;
}

}  // namespace tse
