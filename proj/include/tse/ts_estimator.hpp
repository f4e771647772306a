#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tse/compression.hpp"
#include "tse/errors.hpp"
#include "tse/parallel.hpp"
#include "tse/second_stage.hpp"
#include "tse/sim_models.hpp"
#include "tse/text_format.hpp"

namespace tse {

/// Monte-Carlo training design: M_theta parameter draws, M_y datasets of
/// N observations per draw, n quantiles, ridge lambda. `theta_distribution`
/// is the prior (Bayes) or the proposal (minimax), applied independently
/// to scale and shape.
struct TrainingConfig {
  std::size_t m_theta = 1000;
  std::size_t m_y = 1;
  std::size_t n_obs = 10000;
  std::size_t n_quantiles = 10;
  double ridge = 1e-8;
  // Minimax certificate target, relative to the objective at the ridge start.
  // The 210-column shape problem is too ill-conditioned for much below ~1e-3.
  double minimax_tolerance = 1e-2;
  PriorSpec theta_distribution{PriorKind::Uniform, 1.0, 20.0};
  SeedSpec seed{20240101, 0};

  void validate() const {
    if (m_theta < 1) throw ConfigError("m_theta must be >= 1");
    if (m_y < 1) throw ConfigError("m_y must be >= 1");
    if (n_quantiles < 2) throw ConfigError("n_quantiles must be >= 2");
    if (n_quantiles >= n_obs) throw ConfigError("n_quantiles must be smaller than n_obs");
    if (shape_feature_count(n_quantiles) >= n_obs) {
      throw ConfigError("n_obs must exceed the shape feature count " +
                        std::to_string(shape_feature_count(n_quantiles)));
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("ridge must be finite and >= 0");
    if (!(minimax_tolerance > 0.0) || !std::isfinite(minimax_tolerance)) {
      throw ConfigError("minimax_tolerance must be finite and > 0");
    }
  }
};

/// Canonical text form of a TrainingConfig; the fingerprint hashes this.
inline std::string canonical_string(const TrainingConfig& c) {
  std::ostringstream out;
  out << "m_theta=" << c.m_theta << ";m_y=" << c.m_y << ";n_obs=" << c.n_obs << ";n_quantiles=" << c.n_quantiles
      << ";ridge=" << format_general(c.ridge)
      << ";minimax_tolerance=" << format_general(c.minimax_tolerance) << ";prior=" << to_string(c.theta_distribution.kind())
      << ";lower=" << format_general(c.theta_distribution.lower())
      << ";upper=" << format_general(c.theta_distribution.upper()) << ";root_seed=" << c.seed.root_seed
      << ";stream_index=" << c.seed.stream_index;
  return out.str();
}

/// 64-bit FNV-1a of canonical_string, as 16 hex digits.
inline std::string config_fingerprint(const TrainingConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_string(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct TrainingSample {
  std::size_t parent = 0;  // index into TrainingSet::thetas
  CompressedVector alpha;
};

struct TrainingSet {
  std::vector<WeibullParams> thetas;
  std::vector<TrainingSample> compressed;  // M_theta * M_y entries, row-major in (i, j)
};

// Stream tags below the training seed.
namespace seed_tags {
inline constexpr std::uint64_t kScaleDraws = 1;
inline constexpr std::uint64_t kShapeDraws = 2;
inline constexpr std::uint64_t kDatasets = 3;
inline constexpr std::uint64_t kEvaluation = 4;
inline constexpr std::uint64_t kScatter = 5;
}  // namespace seed_tags

/// Double Monte-Carlo design: theta_i from the configured distribution,
/// then M_y simulated datasets per theta_i, each compressed to n quantiles.
/// Dataset (i, j) uses its own sub-stream, so the result is independent of
/// the thread count.
inline TrainingSet generate_training_set(const TrainingConfig& config, std::size_t threads = 0) {
  config.validate();
  const auto scales = sample_prior(config.m_theta, config.theta_distribution, derive(config.seed, seed_tags::kScaleDraws));
  const auto shapes = sample_prior(config.m_theta, config.theta_distribution, derive(config.seed, seed_tags::kShapeDraws));

  TrainingSet set;
  set.thetas.reserve(config.m_theta);
  for (std::size_t i = 0; i < config.m_theta; ++i) set.thetas.emplace_back(scales[i], shapes[i]);
  set.compressed.resize(config.m_theta * config.m_y);

  const SeedSpec data_root = derive(config.seed, seed_tags::kDatasets);
  parallel_for(config.m_theta, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < config.m_y; ++j) {
      auto y = sample_weibull(config.n_obs, set.thetas[i], derive(data_root, {i, j}));
      std::sort(y.begin(), y.end());
      set.compressed[i * config.m_y + j] = TrainingSample{i, compress_sorted(y, config.n_quantiles)};
    }
  });
  return set;
}

enum class Method { Bayes, Minimax };

inline std::string_view to_string(Method method) { return method == Method::Bayes ? "bayes" : "minimax"; }

inline Method parse_method(std::string_view text) {
  if (text == "bayes") return Method::Bayes;
  if (text == "minimax") return Method::Minimax;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected bayes|minimax)");
}

/// The fitted decision rule delta = g o h_N: one linear readout over scale
/// features for eta and one over shape features for gamma.
struct TSModel {
  Coefficients beta_scale;
  Coefficients beta_shape;
  std::size_t n_quantiles = 0;
  Method method = Method::Bayes;
  std::string config_fingerprint;
};

struct Estimate {
  double eta = 0.0;
  double gamma = 0.0;
};

/// Stacks features of every training row; targets are the scale or shape
/// component of each row's parent theta.
inline RegressionProblem build_problem(const TrainingSet& set, FeatureKind kind, double ridge) {
  if (set.compressed.empty()) throw DomainError("build_problem: empty training set");
  const std::size_t n = set.compressed.front().alpha.size();
  const auto cols = static_cast<Eigen::Index>(feature_count(kind, n));
  RegressionProblem problem;
  problem.features.resize(static_cast<Eigen::Index>(set.compressed.size()), cols);
  problem.targets.resize(static_cast<Eigen::Index>(set.compressed.size()));
  problem.ridge = ridge;
  for (std::size_t r = 0; r < set.compressed.size(); ++r) {
    const auto& sample = set.compressed[r];
    const auto phi = make_features(kind, sample.alpha);
    const auto row = static_cast<Eigen::Index>(r);
    problem.features.row(row) = Eigen::Map<const Eigen::RowVectorXd>(phi.values.data(), cols);
    const auto& theta = set.thetas.at(sample.parent);
    problem.targets[row] = kind == FeatureKind::Scale ? theta.scale() : theta.shape();
  }
  return problem;
}

namespace detail {

template <class Fitter>
TSModel fit_model(const TrainingConfig& config, const TrainingSet& set, Method method, Fitter&& fitter) {
  config.validate();
  TSModel model;
  model.beta_scale = fitter(build_problem(set, FeatureKind::Scale, config.ridge));
  model.beta_shape = fitter(build_problem(set, FeatureKind::Shape, config.ridge));
  model.n_quantiles = config.n_quantiles;
  model.method = method;
  model.config_fingerprint = config_fingerprint(config);
  return model;
}

}  // namespace detail

/// Bayes TS: ridge regression of each parameter on its features.
inline TSModel fit_bayes(const TrainingConfig& config, const TrainingSet& set) {
  return detail::fit_model(config, set, Method::Bayes, [](const RegressionProblem& p) { return fit_ridge(p); });
}

inline TSModel fit_bayes(const TrainingConfig& config, std::size_t threads = 0) {
  return fit_bayes(config, generate_training_set(config, threads));
}

/// Minimax TS: worst-case squared error over the training rows. The
/// importance weights of the proposal drop out because the maximum over
/// the simplex sits at a vertex, so the program only sees the rows.
inline TSModel fit_minimax(const TrainingConfig& config, const TrainingSet& set) {
  return detail::fit_model(config, set, Method::Minimax, [&](const RegressionProblem& p) {
    return fit_minimax(p, relative_minimax_tolerance(p, config.minimax_tolerance));
  });
}

inline TSModel fit_minimax(const TrainingConfig& config, std::size_t threads = 0) {
  return fit_minimax(config, generate_training_set(config, threads));
}

inline TSModel fit(Method method, const TrainingConfig& config, std::size_t threads = 0) {
  return method == Method::Bayes ? fit_bayes(config, threads) : fit_minimax(config, threads);
}

inline Estimate estimate_from_sorted(const TSModel& model, std::span<const double> y_sorted) {
  const auto alpha = compress_sorted(y_sorted, model.n_quantiles);
  const auto scale = feature_scale(alpha);
  const auto shape = feature_shape(alpha);
  if (static_cast<Eigen::Index>(scale.size()) != model.beta_scale.beta.size() ||
      static_cast<Eigen::Index>(shape.size()) != model.beta_shape.beta.size()) {
    throw DomainError("estimate: model coefficients do not match the feature dimensions");
  }
  return Estimate{Eigen::Map<const Eigen::VectorXd>(scale.values.data(), model.beta_scale.beta.size())
                      .dot(model.beta_scale.beta),
                  Eigen::Map<const Eigen::VectorXd>(shape.values.data(), model.beta_shape.beta.size())
                      .dot(model.beta_shape.beta)};
}

/// delta(y) = (beta_scale^T phi_scale(h(y)), beta_shape^T phi_shape(h(y))).
inline Estimate estimate(const TSModel& model, std::span<const double> y) {
  if (y.size() <= model.n_quantiles) throw DomainError("estimate: need more observations than quantiles");
  return estimate_from_sorted(model, order_statistics(y));
}

// Model file format:
//
//   ts-model 1
//   method <bayes|minimax>
//   n_quantiles <n>
//   config_fingerprint <hex>
//   scale_objective <x>
//   scale_certificate <x>
//   scale_count <m>
//   shape_objective <x>
//   shape_certificate <x>
//   shape_count <m>
//   coefficients
//   <scale coefficients, one per line>
//   <shape coefficients, one per line>
//
// Reals use 17 significant digits, so reading back is bit-exact.

inline void write_model(std::ostream& out, const TSModel& model) {
  out << "ts-model 1\n"
      << "method " << to_string(model.method) << '\n'
      << "n_quantiles " << model.n_quantiles << '\n'
      << "config_fingerprint " << model.config_fingerprint << '\n';
  for (const auto& [name, c] : {std::pair{"scale", &model.beta_scale}, std::pair{"shape", &model.beta_shape}}) {
    out << name << "_objective " << format_general(c->objective) << '\n'
        << name << "_certificate " << format_general(c->certificate) << '\n'
        << name << "_count " << c->beta.size() << '\n';
  }
  out << "coefficients\n";
  for (const auto* c : {&model.beta_scale, &model.beta_shape}) {
    for (Eigen::Index i = 0; i < c->beta.size(); ++i) out << format_general(c->beta[i]) << '\n';
  }
}

inline TSModel read_model(std::istream& in) {
  std::string line;
  auto next_value = [&](std::string_view key) {
    if (!std::getline(in, line)) throw IoError("model file truncated before '" + std::string(key) + "'");
    const auto space = line.find(' ');
    if (space == std::string::npos || std::string_view(line).substr(0, space) != key) {
      throw IoError("model file: expected '" + std::string(key) + "', got '" + line + "'");
    }
    return line.substr(space + 1);
  };

  if (next_value("ts-model") != "1") throw IoError("model file: unsupported format version");
  TSModel model;
  try {
    model.method = parse_method(next_value("method"));
  } catch (const ConfigError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
  model.n_quantiles = static_cast<std::size_t>(parse_unsigned(next_value("n_quantiles")));
  model.config_fingerprint = next_value("config_fingerprint");
  std::size_t counts[2] = {0, 0};
  Coefficients* targets[2] = {&model.beta_scale, &model.beta_shape};
  const char* names[2] = {"scale", "shape"};
  for (int k = 0; k < 2; ++k) {
    const std::string prefix = names[k];
    targets[k]->objective = parse_double(next_value(prefix + "_objective"));
    targets[k]->certificate = parse_double(next_value(prefix + "_certificate"));
    counts[k] = static_cast<std::size_t>(parse_unsigned(next_value(prefix + "_count")));
  }
  if (!std::getline(in, line) || line != "coefficients") throw IoError("model file: missing coefficients section");
  for (int k = 0; k < 2; ++k) {
    targets[k]->beta.resize(static_cast<Eigen::Index>(counts[k]));
    for (std::size_t i = 0; i < counts[k]; ++i) {
      if (!std::getline(in, line)) throw IoError("model file: truncated coefficient list");
      targets[k]->beta[static_cast<Eigen::Index>(i)] = parse_double(line);
    }
  }
  if (counts[0] != scale_feature_count(model.n_quantiles) || counts[1] != shape_feature_count(model.n_quantiles)) {
    throw IoError("model file: coefficient counts do not match n_quantiles");
  }
  return model;
}

inline void save_model(const std::string& path, const TSModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_model(out, model);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline TSModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace tse
