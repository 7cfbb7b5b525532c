#pragma once

#include <stdexcept>
#include <string>

namespace plq {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: unknown builtin name, shape mismatch, malformed file, misuse.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during integration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double t_fail)
      : Error(what), t_fail_(t_fail) {}
  double t_fail() const { return t_fail_; }

 private:
  double t_fail_;
};

/// An iterative solve did not reach its tolerance within its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A linear solve was rejected because the matrix is too ill-conditioned.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// A stated precondition does not hold (e.g. unstable closed loop).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Too few points to perform a fit or report.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace plq
