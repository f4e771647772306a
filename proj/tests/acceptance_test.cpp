// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tse/experiment.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("[%s] %d %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs);
  std::fflush(stdout);
  failures += out.pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string sig3(double v) { return fmt("%.2e", v); }

// Reference values for the six evaluation points, in grid order.
constexpr double kCrlbEta[6] = {1.11e-4, 6.93e-6, 4.43e-4, 2.77e-5, 1.77e-3, 1.11e-4};
constexpr double kCrlbGamma[6] = {2.43e-4, 3.89e-3, 2.43e-4, 3.89e-3, 2.43e-4, 3.89e-3};
constexpr double kBayesUniformEta[6] = {2.58e-4, 1.11e-5, 6.74e-4, 3.84e-5, 2.26e-3, 1.58e-4};
constexpr double kBayesUniformGamma[6] = {5.77e-2, 5.61e-2, 1.05e-1, 6.40e-2, 1.89e-1, 7.901e-2};

double max_factor(double a, double b) { return std::max(a / b, b / a); }

tse::RegressionProblem random_problem(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double ridge) {
  std::normal_distribution<double> n01;
  tse::RegressionProblem p;
  p.features = Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return n01(rng); });
  p.targets = Eigen::VectorXd::NullaryExpr(rows, [&] { return 3.0 * n01(rng); });
  p.ridge = ridge;
  return p;
}

// One default-protocol Bayes run: training set, model and risk report.
struct ProtocolRun {
  tse::ExperimentConfig config;
  tse::TrainingSet set;
  tse::TSModel model;
  tse::RiskReport risk;
};

ProtocolRun bayes_run(tse::PriorKind prior) {
  ProtocolRun r;
  r.config.training.theta_distribution = tse::PriorSpec(prior, 1.0, 20.0);
  r.set = tse::generate_training_set(r.config.training);
  r.model = tse::fit_bayes(r.config.training, r.set);
  r.risk = tse::run_mse_experiment(r.config, r.model);
  return r;
}

}  // namespace

int main() {
  const auto grid = tse::table_grid();

  report(1, "CRLB table reproduction", [&] {
    int matched = 0;
    std::string misses;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto b = tse::crlb(grid[p], 10000);
      for (auto [ours, expected] : {std::pair{b.eta, kCrlbEta[p]}, {b.gamma, kCrlbGamma[p]}}) {
        if (sig3(ours) == sig3(expected)) {
          ++matched;
        } else {
          misses += " " + sig3(ours) + "!=" + sig3(expected);
        }
      }
    }
    return Outcome{matched == 12, std::to_string(matched) + "/12 entries equal at 3 significant figures" + misses};
  });

  report(2, "Fisher closed form vs Monte-Carlo oracle", [&] {
    double worst = 0.0;
    std::uint64_t stream = 0;
    for (double eta : {1.0, 2.0, 8.0}) {
      for (double gamma : {1.0, 2.0, 8.0}) {
        const tse::WeibullParams p(eta, gamma);
        const auto exact = tse::fisher_per_sample(p).entries;
        const auto mc = tse::fisher_oracle(p, 1'000'000, {77, stream++}).entries;
        worst = std::max(worst, ((mc - exact).cwiseAbs().array() / exact.cwiseAbs().array()).maxCoeff());
      }
    }
    return Outcome{worst <= 0.01, "worst relative entry error " + fmt("%.3e", worst) + " (limit 1e-2, 1e6 draws)"};
  });

  // Filled by criteria 3 and 4, reused by 4, 6 and 7.
  ProtocolRun uniform, reciprocal;

  report(3, "Bayes MSE within factor of reference values", [&] {
    uniform = bayes_run(tse::PriorKind::Uniform);
    double worst_eta = 0.0, worst_gamma = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      worst_eta = std::max(worst_eta, max_factor(uniform.risk.rows[p].mse_eta, kBayesUniformEta[p]));
      worst_gamma = std::max(worst_gamma, max_factor(uniform.risk.rows[p].mse_gamma, kBayesUniformGamma[p]));
    }
    return Outcome{worst_eta <= 5.0 && worst_gamma <= 10.0,
                   "worst factor eta " + fmt("%.2f", worst_eta) + " (limit 5), gamma " + fmt("%.2f", worst_gamma) +
                       " (limit 10), 1000 runs, (2,2) mse " + sig3(uniform.risk.rows[0].mse_eta) + " / " +
                       sig3(uniform.risk.rows[0].mse_gamma)};
  });

  report(4, "Reciprocal prior lowers shape MSE", [&] {
    if (uniform.risk.rows.empty()) uniform = bayes_run(tse::PriorKind::Uniform);
    reciprocal = bayes_run(tse::PriorKind::Reciprocal);
    bool ok = true;
    std::string detail;
    for (std::size_t p : {0u, 2u, 4u}) {
      const double rec = reciprocal.risk.rows[p].mse_gamma;
      const double uni = uniform.risk.rows[p].mse_gamma;
      ok = ok && rec < uni;
      detail += " (" + fmt("%g", grid[p].scale()) + ",2) " + sig3(rec) + " vs " + sig3(uni) + ";";
    }
    return Outcome{ok, "reciprocal vs uniform mse_gamma:" + detail};
  });

  report(5, "Minimax solver vs brute-force oracle", [&] {
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<int> rows(1, 20), cols(1, 3);
    const double ridges[] = {0.0, 1e-8, 1e-3, 0.1};
    double worst_gap = 0.0;
    int violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = random_problem(rng, rows(rng), cols(rng), ridges[trial % 4]);
      const auto c = tse::fit_minimax(p);
      const double oracle = tse::testing::minimax_oracle(p.features, p.targets, p.ridge, static_cast<unsigned>(trial));
      // The oracle evaluates the same objective with its own rounding.
      if (oracle < c.objective - c.certificate - 1e-12 * (1.0 + oracle)) ++violations;
      worst_gap = std::max(worst_gap, std::abs(c.objective - oracle) / std::max(oracle, 1e-12));
    }
    return Outcome{violations == 0 && worst_gap <= 1e-3, "50 instances, worst relative gap " +
                                                             fmt("%.2e", worst_gap) + " (limit 1e-3), " +
                                                             std::to_string(violations) + " certificate violations"};
  });

  report(6, "Minimax dominates ridge on the worst row", [&] {
    std::vector<std::pair<tse::TrainingConfig, tse::TrainingSet>> sets;
    for (const auto* run : {&uniform, &reciprocal}) {
      if (run->set.thetas.empty()) throw std::runtime_error("protocol training sets missing");
      sets.emplace_back(run->config.training, run->set);
    }
    for (std::uint64_t s = 0; s < 4; ++s) {
      tse::TrainingConfig c;
      c.m_theta = 250 + 100 * s;
      c.n_obs = 1000;
      c.n_quantiles = 4 + 2 * s;
      c.seed = {900 + s, 0};
      sets.emplace_back(c, tse::generate_training_set(c));
    }
    int checked = 0, bad = 0;
    double worst_margin = -1e300;
    for (const auto& [config, set] : sets) {
      const auto mm = tse::fit_minimax(config, set);
      const auto by = tse::fit_bayes(config, set);
      for (auto kind : {tse::FeatureKind::Scale, tse::FeatureKind::Shape}) {
        const auto problem = tse::build_problem(set, kind, config.ridge);
        const bool scale = kind == tse::FeatureKind::Scale;
        const double tol = tse::relative_minimax_tolerance(problem, config.minimax_tolerance);
        const double f_mm = tse::evaluate_max_quadratic((scale ? mm.beta_scale : mm.beta_shape).beta, problem).value;
        const double f_by = tse::evaluate_max_quadratic((scale ? by.beta_scale : by.beta_shape).beta, problem).value;
        ++checked;
        bad += f_mm > f_by + tol;
        worst_margin = std::max(worst_margin, (f_mm - f_by) / tol);
      }
    }
    return Outcome{bad == 0, std::to_string(checked) + " problems on " + std::to_string(sets.size()) +
                                 " training sets, worst (F_minimax - F_ridge)/tolerance " + fmt("%.3g", worst_margin)};
  });

  report(7, "Pipeline invariants", [&] {
    if (uniform.model.n_quantiles == 0) throw std::runtime_error("protocol model missing");
    // Permutation invariance.
    std::mt19937_64 rng(7);
    int perm_bad = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
      auto y = tse::sample_weibull(10000, grid[r % 6], {4000, r});
      const auto e0 = tse::estimate(uniform.model, y);
      std::shuffle(y.begin(), y.end(), rng);
      const auto e1 = tse::estimate(uniform.model, y);
      perm_bad += e0.eta != e1.eta || e0.gamma != e1.gamma;
    }
    // Bit-identical reruns across thread counts.
    int rerun_bad = 0;
    tse::TrainingConfig c;
    c.m_theta = 400;
    c.n_obs = 2000;
    c.seed = {31337, 0};
    for (auto method : {tse::Method::Bayes, tse::Method::Minimax}) {
      const auto a = tse::fit(method, c, 1);
      const auto b = tse::fit(method, c, 4);
      rerun_bad += a.beta_scale.beta != b.beta_scale.beta || a.beta_shape.beta != b.beta_shape.beta ||
                   a.beta_scale.certificate != b.beta_scale.certificate;
      tse::ExperimentConfig ec;
      ec.training = c;
      ec.mc_runs = 50;
      const auto ra = tse::run_mse_experiment(ec, a, 1);
      const auto rb = tse::run_mse_experiment(ec, b, 3);
      for (std::size_t p = 0; p < ra.rows.size(); ++p) {
        rerun_bad += ra.rows[p].mse_eta != rb.rows[p].mse_eta || ra.rows[p].mse_gamma != rb.rows[p].mse_gamma;
      }
    }
    // Quantile consistency against the closed-form inverse CDF.
    double worst_q = 0.0;
    std::uint64_t stream = 0;
    for (const auto& p : {tse::WeibullParams(1, 1), tse::WeibullParams(2, 2), tse::WeibullParams(8, 8),
                          tse::WeibullParams(20, 2), tse::WeibullParams(4, 20)}) {
      const auto alpha = tse::compress(tse::sample_weibull(100'000, p, {8080, stream++}), 10);
      for (std::size_t k = 1; k < 10; ++k) {
        const double exact = p.scale() * std::pow(-std::log(1.0 - k / 10.0), 1.0 / p.shape());
        worst_q = std::max(worst_q, std::abs(alpha.values[k - 1] - exact) / exact);
      }
    }
    return Outcome{perm_bad == 0 && rerun_bad == 0 && worst_q <= 0.02,
                   std::to_string(perm_bad) + " permutation mismatches, " + std::to_string(rerun_bad) +
                       " rerun mismatches, worst quantile error " + fmt("%.2e", worst_q) + " (limit 2e-2)"};
  });

  report(8, "Ridge optimality", [&] {
    std::mt19937_64 rng(8888);
    std::uniform_int_distribution<int> rows(1, 500), cols(1, 250);
    std::normal_distribution<double> n01;
    double worst_stat = 0.0, worst_fd = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto m = cols(rng);
      const auto M = rows(rng);
      const double ridge = (trial % 4 == 0 && M > m + 5) ? 0.0 : (trial % 2 ? 1e-8 : 1e-3);
      const auto p = random_problem(rng, M, m, ridge);
      const auto c = tse::fit_ridge(p);
      const double scale = 1.0 + (p.features.transpose() * p.targets).norm() / static_cast<double>(p.rows());
      worst_stat = std::max(worst_stat, tse::ridge_gradient(c.beta, p).norm() / scale);
      const double h = 1e-4;
      for (int d = 0; d < 5; ++d) {
        const Eigen::VectorXd dir = Eigen::VectorXd::NullaryExpr(m, [&] { return n01(rng); }).normalized();
        const double slope =
            (tse::ridge_objective(c.beta + h * dir, p) - tse::ridge_objective(c.beta - h * dir, p)) / (2.0 * h);
        worst_fd = std::max(worst_fd, std::abs(slope));
      }
    }
    return Outcome{worst_stat <= 1e-8 && worst_fd <= 1e-6,
                   "100 problems, worst scaled stationarity residual " + fmt("%.2e", worst_stat) +
                       " (limit 1e-8), worst directional derivative " + fmt("%.2e", worst_fd) + " (limit 1e-6)"};
  });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
