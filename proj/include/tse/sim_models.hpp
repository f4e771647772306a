#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tse/errors.hpp"
#include "tse/random.hpp"

namespace tse {

/// Parameters of the two-parameter Weibull model, theta = (scale, shape).
class WeibullParams {
 public:
  WeibullParams(double scale, double shape) : scale_(scale), shape_(shape) {
    if (!(scale > 0.0) || !(shape > 0.0) || !std::isfinite(scale) || !std::isfinite(shape)) {
      throw DomainError("WeibullParams: scale and shape must be finite and positive");
    }
  }

  double scale() const noexcept { return scale_; }
  double shape() const noexcept { return shape_; }

  friend bool operator==(const WeibullParams&, const WeibullParams&) = default;

 private:
  double scale_;
  double shape_;
};

enum class PriorKind { Uniform, Reciprocal };

inline std::string_view to_string(PriorKind kind) {
  return kind == PriorKind::Uniform ? "uniform" : "reciprocal";
}

inline PriorKind parse_prior_kind(std::string_view text) {
  if (text == "uniform") return PriorKind::Uniform;
  if (text == "reciprocal") return PriorKind::Reciprocal;
  throw ConfigError("unknown prior kind '" + std::string(text) + "' (expected uniform|reciprocal)");
}

/// Distribution over one positive scalar parameter on [lower, upper]:
/// either uniform or with density c/x, c = 1/ln(upper/lower).
class PriorSpec {
 public:
  PriorSpec(PriorKind kind, double lower, double upper) : kind_(kind), lower_(lower), upper_(upper) {
    if (!(lower > 0.0) || !(lower < upper) || !std::isfinite(upper)) {
      throw DomainError("PriorSpec: require 0 < lower < upper < inf");
    }
  }

  PriorKind kind() const noexcept { return kind_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

  bool contains(double x) const noexcept { return x >= lower_ && x <= upper_; }

  double density(double x) const noexcept {
    if (!contains(x)) return 0.0;
    if (kind_ == PriorKind::Uniform) return 1.0 / (upper_ - lower_);
    return 1.0 / (x * std::log(upper_ / lower_));
  }

  /// Inverse CDF at u in [0, 1).
  double quantile(double u) const noexcept {
    if (kind_ == PriorKind::Uniform) return lower_ + (upper_ - lower_) * u;
    return lower_ * std::pow(upper_ / lower_, u);
  }

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  PriorKind kind_;
  double lower_;
  double upper_;
};

/// (gamma/eta) (x/eta)^(gamma-1) exp(-(x/eta)^gamma) for x >= 0.
inline double weibull_pdf(double x, const WeibullParams& params) {
  if (!(x >= 0.0)) throw DomainError("weibull_pdf: x must be non-negative");
  const double eta = params.scale();
  const double gamma = params.shape();
  const double z = x / eta;
  if (z == 0.0) {
    if (gamma > 1.0) return 0.0;
    if (gamma == 1.0) return 1.0 / eta;
    return HUGE_VAL;
  }
  return (gamma / eta) * std::pow(z, gamma - 1.0) * std::exp(-std::pow(z, gamma));
}

inline double weibull_cdf(double x, const WeibullParams& params) {
  if (!(x >= 0.0)) throw DomainError("weibull_cdf: x must be non-negative");
  return -std::expm1(-std::pow(x / params.scale(), params.shape()));
}

/// eta (-ln(1-p))^(1/gamma) for p in [0, 1).
inline double weibull_quantile(double p, const WeibullParams& params) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("weibull_quantile: p must lie in [0, 1)");
  return params.scale() * std::pow(-std::log1p(-p), 1.0 / params.shape());
}

/// i.i.d. Weibull draws by inverse-CDF transform of the seeded uniform stream.
inline std::vector<double> sample_weibull(std::size_t n_samples, const WeibullParams& params, const SeedSpec& seed) {
  if (n_samples == 0) throw DomainError("sample_weibull: n_samples must be >= 1");
  RandomStream stream(seed);
  std::vector<double> out(n_samples);
  for (auto& y : out) y = weibull_quantile(stream.uniform(), params);
  return out;
}

inline std::vector<double> sample_prior(std::size_t m, const PriorSpec& prior, const SeedSpec& seed) {
  if (m == 0) throw DomainError("sample_prior: m must be >= 1");
  RandomStream stream(seed);
  std::vector<double> out(m);
  for (auto& x : out) x = prior.quantile(stream.uniform());
  return out;
}

}  // namespace tse
