// ts_estimate: fit two-stage Weibull estimators, evaluate their Monte-Carlo
// risk, and write the comparison table and scatter data.
//
// Exit codes: 0 ok, 2 invalid configuration, 3 solver failure, 4 I/O failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tse/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m_theta;
  std::optional<std::size_t> n_obs;
  std::optional<std::size_t> n_quantiles;
  std::optional<double> ridge;
  std::optional<std::string> prior;
  std::string method = "bayes";
  std::optional<std::size_t> mc_runs;
  std::optional<std::string> out;
  std::string model;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config; flags override it");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--m-theta", o.m_theta, "parameter draws in the training set");
  cmd->add_option("--n-obs", o.n_obs, "observations per dataset");
  cmd->add_option("--n-quantiles", o.n_quantiles, "quantiles kept by the first stage");
  cmd->add_option("--ridge", o.ridge, "ridge penalty lambda");
  cmd->add_option("--prior", o.prior, "uniform|reciprocal")->check(CLI::IsMember({"uniform", "reciprocal"}));
  cmd->add_option("--method", o.method, "bayes|minimax")->check(CLI::IsMember({"bayes", "minimax"}));
  cmd->add_option("--mc-runs", o.mc_runs, "Monte-Carlo evaluation runs per point");
  cmd->add_option("--out", o.out, "output directory");
}

tse::ExperimentConfig build_config(const Overrides& o) {
  tse::ExperimentConfig c = o.config.empty() ? tse::ExperimentConfig{} : tse::load_experiment_config(o.config);
  if (o.seed) c.training.seed.root_seed = *o.seed;
  if (o.m_theta) c.training.m_theta = *o.m_theta;
  if (o.n_obs) c.training.n_obs = *o.n_obs;
  if (o.n_quantiles) c.training.n_quantiles = *o.n_quantiles;
  if (o.ridge) c.training.ridge = *o.ridge;
  if (o.prior) {
    const auto& d = c.training.theta_distribution;
    c.training.theta_distribution = tse::PriorSpec(tse::parse_prior_kind(*o.prior), d.lower(), d.upper());
  }
  if (o.mc_runs) c.mc_runs = *o.mc_runs;
  if (o.out) c.output_dir = *o.out;
  c.validate();
  return c;
}

std::string model_name(tse::Method m, const tse::ExperimentConfig& c) {
  return "model-" + std::string(tse::to_string(m)) + "-" +
         std::string(tse::to_string(c.training.theta_distribution.kind())) + ".txt";
}

tse::TSModel obtain_model(const Overrides& o, const tse::ExperimentConfig& c, std::size_t threads) {
  if (o.model.empty()) return tse::fit(tse::parse_method(o.method), c.training, threads);
  auto model = tse::load_model(o.model);
  if (model.config_fingerprint != tse::config_fingerprint(c.training)) {
    std::cerr << "note: model was trained under a different configuration\n";
  }
  return model;
}

int run(int argc, char** argv) {
  CLI::App app{"Two-stage estimation of Weibull parameters"};
  app.require_subcommand(1);
  Overrides o;

  auto* fit_cmd = app.add_subcommand("fit", "train an estimator and save the model");
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo MSE of an estimator at the eval points");
  auto* crlb_cmd = app.add_subcommand("crlb", "Cramer-Rao bounds at the eval points");
  auto* table_cmd = app.add_subcommand("reproduce-table1", "all three estimators against the bounds");
  auto* scatter_cmd = app.add_subcommand("scatter", "estimates for fresh parameter draws");
  for (auto* cmd : {fit_cmd, eval_cmd, crlb_cmd, table_cmd, scatter_cmd}) add_common(cmd, o);
  for (auto* cmd : {eval_cmd, scatter_cmd}) {
    cmd->add_option("--model", o.model, "model file from 'fit' (default: train first)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const auto config = build_config(o);
  const std::size_t threads = tse::threads_from_env();

  if (*fit_cmd) {
    const auto model = tse::fit(tse::parse_method(o.method), config.training, threads);
    const auto path = tse::prepare_output_dir(config.output_dir) / model_name(model.method, config);
    tse::save_model(path.string(), model);
    std::cout << path.string() << '\n'
              << "scale objective " << tse::format_scientific(model.beta_scale.objective, 6) << " certificate "
              << tse::format_scientific(model.beta_scale.certificate, 3) << '\n'
              << "shape objective " << tse::format_scientific(model.beta_shape.objective, 6) << " certificate "
              << tse::format_scientific(model.beta_shape.certificate, 3) << '\n';
  } else if (*eval_cmd) {
    const auto model = obtain_model(o, config, threads);
    const auto report = tse::run_mse_experiment(config, model, threads);
    tse::write_risk_table(std::cout, {report});
    if (config.emit.contains(tse::Artifact::Table)) {
      std::cerr << tse::write_risk_table_file(config.output_dir, "mse-" + report.method + ".csv", {report}) << '\n';
    }
  } else if (*crlb_cmd) {
    std::cout << "eta,gamma,n_obs,crlb_eta,crlb_gamma\n";
    for (const auto& p : config.eval_points) {
      const auto b = tse::crlb(p, config.training.n_obs);
      std::cout << tse::format_general(p.scale(), 6) << ',' << tse::format_general(p.shape(), 6) << ','
                << config.training.n_obs << ',' << tse::format_scientific(b.eta, 6) << ','
                << tse::format_scientific(b.gamma, 6) << '\n';
    }
  } else if (*table_cmd) {
    const auto reports = tse::reproduce_table(config, threads);
    tse::write_risk_table(std::cout, {reports.begin(), reports.end()});
  } else if (*scatter_cmd) {
    const auto model = obtain_model(o, config, threads);
    std::cout << tse::emit_scatter(model, config, threads) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const tse::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const tse::BudgetExceededError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const tse::RankDeficiencyError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const tse::DegenerateInputError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const tse::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
