#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tse {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Compressed data that cannot be turned into features (zero quantiles).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normal equations that cannot be factored with a zero ridge term.
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The minimax solver ran out of iterations before certifying its gap.
class BudgetExceededError : public std::runtime_error {
 public:
  BudgetExceededError(const std::string& what, std::vector<double> best_beta, double objective,
                      double certificate)
      : std::runtime_error(what),
        best_beta_(std::move(best_beta)),
        objective_(objective),
        certificate_(certificate) {}

  const std::vector<double>& best_beta() const noexcept { return best_beta_; }
  double objective() const noexcept { return objective_; }
  double certificate() const noexcept { return certificate_; }

 private:
  std::vector<double> best_beta_;
  double objective_;
  double certificate_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tse
