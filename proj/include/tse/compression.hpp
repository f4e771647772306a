#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tse/errors.hpp"

namespace tse {

/// First-stage statistic: sample quantiles at p = k/n, k = 1..n.
struct CompressedVector {
  std::vector<double> values;
  std::size_t source_size = 0;  // N, length of the data that was compressed

  std::size_t size() const noexcept { return values.size(); }
};

enum class FeatureKind { Scale, Shape };

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Scale;

  std::size_t size() const noexcept { return values.size(); }
};

constexpr std::size_t scale_feature_count(std::size_t n_quantiles) noexcept { return 2 * n_quantiles - 1; }

constexpr std::size_t shape_feature_count(std::size_t n_quantiles) noexcept {
  const std::size_t q = 2 * n_quantiles - 1;
  return 1 + q + q * (q + 1) / 2;
}

constexpr std::size_t feature_count(FeatureKind kind, std::size_t n_quantiles) noexcept {
  return kind == FeatureKind::Scale ? scale_feature_count(n_quantiles) : shape_feature_count(n_quantiles);
}

inline std::vector<double> order_statistics(std::span<const double> y) {
  if (y.empty()) throw DomainError("order_statistics: empty input");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

namespace detail {

// Interpolates between adjacent order statistics at zero-based position
// lo + frac. The result is clamped to the bracketing pair so the quantile
// curve stays monotone under rounding.
inline double interpolate_sorted(std::span<const double> y_sorted, std::size_t lo, double frac) {
  if (frac == 0.0 || lo + 1 >= y_sorted.size()) return y_sorted[lo];
  const double a = y_sorted[lo];
  const double b = y_sorted[lo + 1];
  return std::clamp(a + frac * (b - a), a, b);
}

}  // namespace detail

/// Linear-interpolation sample quantile at zero-based position p (N - 1).
inline double sample_quantile(std::span<const double> y_sorted, double p) {
  if (y_sorted.size() < 2) throw DomainError("sample_quantile: need at least two observations");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("sample_quantile: p must lie in (0, 1]");
  const double pos = p * static_cast<double>(y_sorted.size() - 1);
  const double floor_pos = std::floor(pos);
  const auto lo = std::min(static_cast<std::size_t>(floor_pos), y_sorted.size() - 1);
  return detail::interpolate_sorted(y_sorted, lo, pos - floor_pos);
}

/// Quantiles at p = k/n of the sorted data. Positions k (N - 1) / n are
/// split with integer arithmetic so grid points that land on an order
/// statistic return it exactly.
inline CompressedVector compress_sorted(std::span<const double> y_sorted, std::size_t n) {
  if (n == 0) throw DomainError("compress: n must be >= 1");
  if (y_sorted.size() <= n) throw DomainError("compress: need more observations than quantiles");
  const std::size_t last = y_sorted.size() - 1;
  CompressedVector out;
  out.source_size = y_sorted.size();
  out.values.resize(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t numerator = k * last;
    const std::size_t lo = numerator / n;
    const double frac = static_cast<double>(numerator % n) / static_cast<double>(n);
    out.values[k - 1] = detail::interpolate_sorted(y_sorted, lo, frac);
  }
  return out;
}

inline CompressedVector compress(std::span<const double> y, std::size_t n) {
  if (n == 0) throw DomainError("compress: n must be >= 1");
  if (y.size() <= n) throw DomainError("compress: need more observations than quantiles");
  const auto sorted = order_statistics(y);
  return compress_sorted(sorted, n);
}

/// Scale features: the quantiles followed by alpha_k / alpha_1, k = 2..n.
inline FeatureVector feature_scale(const CompressedVector& alpha) {
  const auto& a = alpha.values;
  if (a.empty()) throw DomainError("feature_scale: empty compressed vector");
  if (a.front() == 0.0) throw DegenerateInputError("feature_scale: first quantile is zero");
  FeatureVector out{{}, FeatureKind::Scale};
  out.values.reserve(scale_feature_count(a.size()));
  out.values.insert(out.values.end(), a.begin(), a.end());
  for (std::size_t k = 1; k < a.size(); ++k) out.values.push_back(a[k] / a.front());
  return out;
}

/// Shape features: all monomials of order 0, 1 and 2 in
/// psi = (alpha_1..alpha_n, alpha_1/alpha_n..alpha_{n-1}/alpha_n),
/// ordered [1, psi_j, psi_j psi_k for j <= k].
inline FeatureVector feature_shape(const CompressedVector& alpha) {
  const auto& a = alpha.values;
  if (a.empty()) throw DomainError("feature_shape: empty compressed vector");
  if (a.back() == 0.0) throw DegenerateInputError("feature_shape: last quantile is zero");
  std::vector<double> psi(a.begin(), a.end());
  for (std::size_t k = 0; k + 1 < a.size(); ++k) psi.push_back(a[k] / a.back());

  FeatureVector out{{}, FeatureKind::Shape};
  out.values.reserve(shape_feature_count(a.size()));
  out.values.push_back(1.0);
  out.values.insert(out.values.end(), psi.begin(), psi.end());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    for (std::size_t k = j; k < psi.size(); ++k) out.values.push_back(psi[j] * psi[k]);
  }
  return out;
}

inline FeatureVector make_features(FeatureKind kind, const CompressedVector& alpha) {
  return kind == FeatureKind::Scale ? feature_scale(alpha) : feature_shape(alpha);
}

}  // namespace tse
