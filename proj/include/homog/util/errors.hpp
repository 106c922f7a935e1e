#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad expression trees, invalid configs, violated preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A request that cannot be honoured at the resolution or memory budget allowed.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Iterative solve that did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : Error(what), residual_history_(std::move(history)) {}

  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

/// A computation that finished but whose result failed its own validity
/// checks (e.g. too many censored Monte Carlo paths).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace homog
