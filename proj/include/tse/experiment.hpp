#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tse/crlb.hpp"
#include "tse/parallel.hpp"
#include "tse/text_format.hpp"
#include "tse/ts_estimator.hpp"

namespace tse {

enum class Artifact { Scatter, Table, Model };

inline std::string_view to_string(Artifact a) {
  switch (a) {
    case Artifact::Scatter: return "scatter";
    case Artifact::Table: return "table";
    case Artifact::Model: return "model";
  }
  return "table";
}

inline Artifact parse_artifact(std::string_view text) {
  if (text == "scatter") return Artifact::Scatter;
  if (text == "table") return Artifact::Table;
  if (text == "model") return Artifact::Model;
  throw ConfigError("unknown artifact '" + std::string(text) + "' (expected scatter|table|model)");
}

/// The six standard (eta, gamma) evaluation points.
inline std::vector<WeibullParams> table_grid() {
  return {{2, 2}, {2, 8}, {4, 2}, {4, 8}, {8, 2}, {8, 8}};
}

struct ExperimentConfig {
  TrainingConfig training;
  std::vector<WeibullParams> eval_points = table_grid();
  std::size_t mc_runs = 1000;
  std::string output_dir = ".";
  std::set<Artifact> emit{Artifact::Table};

  void validate() const {
    training.validate();
    if (mc_runs < 1) throw ConfigError("mc_runs must be >= 1");
    if (eval_points.empty()) throw ConfigError("eval_points must not be empty");
    const auto& support = training.theta_distribution;
    for (const auto& p : eval_points) {
      if (!support.contains(p.scale()) || !support.contains(p.shape())) {
        throw ConfigError("eval point (" + format_general(p.scale(), 6) + ", " + format_general(p.shape(), 6) +
                          ") lies outside the prior support");
      }
    }
  }
};

// JSON mirrors the struct:
//   {"training": {"m_theta": 1000, "m_y": 1, "n_obs": 10000, "n_quantiles": 10,
//                 "ridge": 1e-8, "minimax_tolerance": 1e-2,
//                 "prior": {"kind": "uniform", "lower": 1, "upper": 20},
//                 "seed": {"root_seed": 20240101, "stream_index": 0}},
//    "eval_points": [[2, 2], [2, 8]], "mc_runs": 1000, "output_dir": "out",
//    "emit": ["table", "scatter", "model"]}
// Every key is optional; unknown keys are rejected.
namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void read_count(const nlohmann::json& j, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  using detail::read_count;
  using detail::read_field;
  detail::reject_unknown(j, {"training", "eval_points", "mc_runs", "output_dir", "emit"}, "config");
  ExperimentConfig c;
  if (j.contains("training")) {
    const auto& t = j.at("training");
    detail::reject_unknown(t, {"m_theta", "m_y", "n_obs", "n_quantiles", "ridge", "minimax_tolerance", "prior", "seed"},
                           "training");
    read_count(t, "m_theta", c.training.m_theta);
    read_count(t, "m_y", c.training.m_y);
    read_count(t, "n_obs", c.training.n_obs);
    read_count(t, "n_quantiles", c.training.n_quantiles);
    read_field(t, "ridge", c.training.ridge);
    read_field(t, "minimax_tolerance", c.training.minimax_tolerance);
    if (t.contains("prior")) {
      const auto& p = t.at("prior");
      detail::reject_unknown(p, {"kind", "lower", "upper"}, "training.prior");
      std::string kind(to_string(c.training.theta_distribution.kind()));
      double lower = c.training.theta_distribution.lower();
      double upper = c.training.theta_distribution.upper();
      read_field(p, "kind", kind);
      read_field(p, "lower", lower);
      read_field(p, "upper", upper);
      try {
        c.training.theta_distribution = PriorSpec(parse_prior_kind(kind), lower, upper);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
    if (t.contains("seed")) {
      const auto& s = t.at("seed");
      detail::reject_unknown(s, {"root_seed", "stream_index"}, "training.seed");
      read_field(s, "root_seed", c.training.seed.root_seed);
      read_field(s, "stream_index", c.training.seed.stream_index);
    }
  }
  if (j.contains("eval_points")) {
    std::vector<std::array<double, 2>> raw;
    read_field(j, "eval_points", raw);
    c.eval_points.clear();
    for (const auto& [eta, gamma] : raw) {
      try {
        c.eval_points.emplace_back(eta, gamma);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  read_count(j, "mc_runs", c.mc_runs);
  read_field(j, "output_dir", c.output_dir);
  if (j.contains("emit")) {
    std::vector<std::string> names;
    read_field(j, "emit", names);
    c.emit.clear();
    for (const auto& n : names) c.emit.insert(parse_artifact(n));
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

struct RiskRow {
  std::string method;
  double eta = 0.0;
  double gamma = 0.0;
  double crlb_eta = 0.0;
  double crlb_gamma = 0.0;
  double mse_eta = 0.0;
  double mse_gamma = 0.0;
  double se_mse_eta = 0.0;  // Monte-Carlo standard error of mse_eta
  double se_mse_gamma = 0.0;
  std::size_t out_of_support = 0;  // runs with an estimate outside the prior support; never clipped

  double efficiency_eta() const { return mse_eta / crlb_eta; }
  double efficiency_gamma() const { return mse_gamma / crlb_gamma; }
};

struct RiskReport {
  std::string method;
  std::vector<RiskRow> rows;  // one per eval point, same order
};

/// Squared errors of one Monte-Carlo run.
struct RunError {
  double eta = 0.0;
  double gamma = 0.0;
  bool out_of_support = false;
};

/// errors[p][r] for eval point p and run r. Run r at point p always sees the
/// same data, so a longer run extends a shorter one without changing it.
template <class Estimator>
std::vector<std::vector<RunError>> monte_carlo_errors(const ExperimentConfig& config, Estimator&& estimator,
                                                      std::size_t threads = 0) {
  config.validate();
  const std::size_t points = config.eval_points.size();
  const std::size_t runs = config.mc_runs;
  const auto& support = config.training.theta_distribution;
  std::vector<std::vector<RunError>> errors(points, std::vector<RunError>(runs));
  parallel_for(points * runs, threads, [&](std::size_t task) {
    const std::size_t p = task / runs;
    const std::size_t r = task % runs;
    const auto& truth = config.eval_points[p];
    const auto y = sample_weibull(config.training.n_obs, truth,
                                  derive(config.training.seed, {seed_tags::kEvaluation, p, r}));
    const Estimate e = estimator(std::span<const double>(y));
    errors[p][r] = RunError{(e.eta - truth.scale()) * (e.eta - truth.scale()),
                            (e.gamma - truth.shape()) * (e.gamma - truth.shape()),
                            !support.contains(e.eta) || !support.contains(e.gamma)};
  });
  return errors;
}

inline RiskReport summarize_errors(const ExperimentConfig& config, const std::vector<std::vector<RunError>>& errors,
                                   std::string method) {
  RiskReport report{std::move(method), {}};
  for (std::size_t p = 0; p < config.eval_points.size(); ++p) {
    const auto& truth = config.eval_points[p];
    const auto bound = crlb(truth, config.training.n_obs);
    const auto& e = errors.at(p);
    const double n = static_cast<double>(e.size());
    double se = 0, sg = 0, se2 = 0, sg2 = 0;
    RiskRow row;
    for (const auto& run : e) {
      se += run.eta;
      sg += run.gamma;
      se2 += run.eta * run.eta;
      sg2 += run.gamma * run.gamma;
      row.out_of_support += run.out_of_support;
    }
    row.method = report.method;
    row.eta = truth.scale();
    row.gamma = truth.shape();
    row.crlb_eta = bound.eta;
    row.crlb_gamma = bound.gamma;
    row.mse_eta = se / n;
    row.mse_gamma = sg / n;
    if (e.size() > 1) {
      row.se_mse_eta = std::sqrt(std::max(0.0, se2 / n - row.mse_eta * row.mse_eta) / (n - 1.0));
      row.se_mse_gamma = std::sqrt(std::max(0.0, sg2 / n - row.mse_gamma * row.mse_gamma) / (n - 1.0));
    }
    report.rows.push_back(row);
  }
  return report;
}

/// Monte-Carlo risk at each eval point: mc_runs fresh datasets of n_obs
/// observations, never shared with training.
template <class Estimator>
RiskReport run_mse_experiment(const ExperimentConfig& config, Estimator&& estimator, std::string method,
                              std::size_t threads = 0) {
  return summarize_errors(config, monte_carlo_errors(config, estimator, threads), std::move(method));
}

inline RiskReport run_mse_experiment(const ExperimentConfig& config, const TSModel& model, std::size_t threads = 0) {
  if (model.n_quantiles != config.training.n_quantiles) {
    throw ConfigError("model n_quantiles " + std::to_string(model.n_quantiles) + " differs from the configuration's " +
                      std::to_string(config.training.n_quantiles));
  }
  return run_mse_experiment(
      config, [&](std::span<const double> y) { return estimate(model, y); },
      std::string(to_string(model.method)) + "-" + std::string(to_string(config.training.theta_distribution.kind())),
      threads);
}

// Table file: one header line, then one row per (method, eval point).
inline constexpr const char* kTableHeader =
    "method,eta,gamma,crlb_eta,crlb_gamma,mse_eta,mse_gamma,se_mse_eta,se_mse_gamma,efficiency_eta,efficiency_gamma,out_of_support";

inline void write_risk_table(std::ostream& out, const std::vector<RiskReport>& reports) {
  out << kTableHeader << '\n';
  for (const auto& report : reports) {
    for (const auto& r : report.rows) {
      out << report.method;
      for (double v : {r.eta, r.gamma, r.crlb_eta, r.crlb_gamma, r.mse_eta, r.mse_gamma, r.se_mse_eta, r.se_mse_gamma,
                       r.efficiency_eta(), r.efficiency_gamma()}) {
        out << ',' << format_scientific(v, 6);
      }
      out << ',' << r.out_of_support;
      out << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

/// Reports in file order; consecutive rows with the same method form one report.
inline std::vector<RiskReport> read_risk_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader) throw IoError("table file: unexpected header");
  std::vector<RiskReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 12) throw IoError("table file: expected 12 fields, got " + std::to_string(f.size()));
    RiskRow r;
    r.method = f[0];
    r.eta = parse_double(f[1]);
    r.gamma = parse_double(f[2]);
    r.crlb_eta = parse_double(f[3]);
    r.crlb_gamma = parse_double(f[4]);
    r.mse_eta = parse_double(f[5]);
    r.mse_gamma = parse_double(f[6]);
    r.se_mse_eta = parse_double(f[7]);
    r.se_mse_gamma = parse_double(f[8]);
    r.out_of_support = static_cast<std::size_t>(parse_unsigned(f[11]));
    if (reports.empty() || reports.back().method != r.method) reports.push_back({r.method, {}});
    reports.back().rows.push_back(r);
  }
  return reports;
}

inline std::filesystem::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return std::filesystem::path(dir);
}

inline std::string write_risk_table_file(const std::string& dir, const std::string& name,
                                         const std::vector<RiskReport>& reports) {
  const auto path = prepare_output_dir(dir) / name;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_risk_table(out, reports);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  return path.string();
}

/// The three standard variants: Bayes with the uniform prior, Bayes with
/// the reciprocal prior, minimax with the uniform proposal. All share the
/// training seed, so they also share evaluation data.
inline std::array<RiskReport, 3> reproduce_table(const ExperimentConfig& config, std::size_t threads = 0) {
  config.validate();
  const auto& base = config.training.theta_distribution;
  struct Variant {
    Method method;
    PriorKind prior;
  };
  constexpr Variant variants[3] = {
      {Method::Bayes, PriorKind::Uniform}, {Method::Bayes, PriorKind::Reciprocal}, {Method::Minimax, PriorKind::Uniform}};

  std::array<RiskReport, 3> reports;
  for (std::size_t v = 0; v < 3; ++v) {
    ExperimentConfig run = config;
    run.training.theta_distribution = PriorSpec(variants[v].prior, base.lower(), base.upper());
    const TSModel model = fit(variants[v].method, run.training, threads);
    if (config.emit.contains(Artifact::Model)) {
      const auto path = prepare_output_dir(config.output_dir) /
                        ("model-" + std::string(to_string(model.method)) + "-" +
                         std::string(to_string(variants[v].prior)) + ".txt");
      save_model(path.string(), model);
    }
    reports[v] = run_mse_experiment(run, model, threads);
  }
  if (config.emit.contains(Artifact::Table)) {
    write_risk_table_file(config.output_dir, "table1.csv", {reports.begin(), reports.end()});
  }
  return reports;
}

struct ScatterRow {
  double true_eta = 0.0;
  double true_gamma = 0.0;
  double est_eta = 0.0;
  double est_gamma = 0.0;
};

inline constexpr const char* kScatterHeader = "true_eta,true_gamma,est_eta,est_gamma";

/// M_theta fresh parameter draws from the training distribution, one
/// simulated dataset each, estimated with `model`.
inline std::vector<ScatterRow> scatter_rows(const TSModel& model, const ExperimentConfig& config,
                                            std::size_t threads = 0) {
  config.validate();
  const auto& t = config.training;
  const SeedSpec root = derive(t.seed, seed_tags::kScatter);
  const auto scales = sample_prior(t.m_theta, t.theta_distribution, derive(root, 1));
  const auto shapes = sample_prior(t.m_theta, t.theta_distribution, derive(root, 2));
  const SeedSpec data = derive(root, 3);
  std::vector<ScatterRow> rows(t.m_theta);
  parallel_for(t.m_theta, threads, [&](std::size_t i) {
    const WeibullParams truth(scales[i], shapes[i]);
    const auto e = estimate(model, sample_weibull(t.n_obs, truth, derive(data, i)));
    rows[i] = ScatterRow{truth.scale(), truth.shape(), e.eta, e.gamma};
  });
  return rows;
}

inline void write_scatter(std::ostream& out, const std::vector<ScatterRow>& rows) {
  out << kScatterHeader << '\n';
  for (const auto& r : rows) {
    out << format_general(r.true_eta) << ',' << format_general(r.true_gamma) << ',' << format_general(r.est_eta)
        << ',' << format_general(r.est_gamma) << '\n';
  }
}

inline std::vector<ScatterRow> read_scatter(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kScatterHeader) throw IoError("scatter file: unexpected header");
  std::vector<ScatterRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw IoError("scatter file: expected 4 fields");
    rows.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  }
  return rows;
}

/// Writes scatter-<method>-<prior>.csv into output_dir and returns its path.
inline std::string emit_scatter(const TSModel& model, const ExperimentConfig& config, std::size_t threads = 0) {
  const auto rows = scatter_rows(model, config, threads);
  const auto path = prepare_output_dir(config.output_dir) /
                    ("scatter-" + std::string(to_string(model.method)) + "-" +
                     std::string(to_string(config.training.theta_distribution.kind())) + ".csv");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_scatter(out, rows);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  return path.string();
}

}  // namespace tse
